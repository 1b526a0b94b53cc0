//! Forward-mode automatic differentiation.
//!
//! Model code is written once against [`Scalar`] and evaluated either with
//! plain `f64` or with [`Dual`] numbers carrying a fixed-size gradient. Only
//! the operations on [`Scalar`] are available to model code, so an
//! unsupported primitive is rejected by the compiler.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::math;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;

    fn exp(self) -> Self;
    fn expm1(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn sqrt(self) -> Self;
    fn erf(self) -> Self;
    fn erfc(self) -> Self;
    /// `ln(erfc(x))` without underflow for large positive `x`.
    fn ln_erfc(self) -> Self;

    /// Returns `c` when the value exceeds `c` (zero gradient on that side).
    fn min_cst(self, c: f64) -> Self {
        if self.value() > c {
            Self::cst(c)
        } else {
            self
        }
    }

    /// Returns `c` when the value is below `c` (zero gradient on that side).
    fn max_cst(self, c: f64) -> Self {
        if self.value() < c {
            Self::cst(c)
        } else {
            self
        }
    }

    fn powf(self, e: Self) -> Self {
        (e * self.ln()).exp()
    }

    fn square(self) -> Self {
        self * self
    }

    fn is_finite(&self) -> bool {
        self.value().is_finite()
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn expm1(self) -> Self {
        f64::exp_m1(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn erf(self) -> Self {
        libm::erf(self)
    }
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
    fn ln_erfc(self) -> Self {
        math::ln_erfc_f64(self)
    }
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
}

/// A value together with its partial derivatives with respect to `N`
/// independent inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub value: f64,
    pub partials: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            partials: [0.0; N],
        }
    }

    /// The `i`-th independent variable, seeded with a unit partial.
    pub fn variable(value: f64, i: usize) -> Self {
        let mut partials = [0.0; N];
        partials[i] = 1.0;
        Self { value, partials }
    }

    /// Applies a unary function with value `v` and derivative `dv`.
    #[inline]
    fn chain(self, v: f64, dv: f64) -> Self {
        let mut partials = self.partials;
        for p in &mut partials {
            *p *= dv;
        }
        Self { value: v, partials }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for (a, b) in self.partials.iter_mut().zip(rhs.partials) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> AddAssign for Dual<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        for (a, b) in self.partials.iter_mut().zip(rhs.partials) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut partials = [0.0; N];
        for i in 0..N {
            partials[i] = self.partials[i] * rhs.value + rhs.partials[i] * self.value;
        }
        Self {
            value: self.value * rhs.value,
            partials,
        }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let value = self.value / rhs.value;
        let mut partials = [0.0; N];
        for i in 0..N {
            partials[i] = (self.partials[i] - value * rhs.partials[i]) / rhs.value;
        }
        Self { value, partials }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.chain(-self.value, -1.0)
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.value += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: f64) -> Self {
        self.value -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.chain(self.value * rhs, rhs)
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self.chain(self.value / rhs, 1.0 / rhs)
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn expm1(self) -> Self {
        self.chain(self.value.exp_m1(), self.value.exp())
    }
    fn ln(self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    fn ln_1p(self) -> Self {
        self.chain(self.value.ln_1p(), 1.0 / (1.0 + self.value))
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn erf(self) -> Self {
        let d = std::f64::consts::FRAC_2_SQRT_PI * (-self.value * self.value).exp();
        self.chain(libm::erf(self.value), d)
    }
    fn erfc(self) -> Self {
        let d = -std::f64::consts::FRAC_2_SQRT_PI * (-self.value * self.value).exp();
        self.chain(libm::erfc(self.value), d)
    }
    fn ln_erfc(self) -> Self {
        let v = math::ln_erfc_f64(self.value);
        // d/dx ln erfc(x) = -2/sqrt(pi) exp(-x^2) / erfc(x), formed in log space.
        let d = -std::f64::consts::FRAC_2_SQRT_PI * (-self.value * self.value - v).exp();
        self.chain(v, d)
    }
}

/// Evaluates `f` at `x` and returns its value and exact gradient.
pub fn evaluate_with_gradient<const N: usize, F>(f: F, x: &[f64; N]) -> (f64, [f64; N])
where
    F: FnOnce(&[Dual<N>; N]) -> Dual<N>,
{
    let vars: [Dual<N>; N] = std::array::from_fn(|i| Dual::variable(x[i], i));
    let out = f(&vars);
    (out.value, out.partials)
}

/// Central finite-difference gradient, used as an independent check on
/// [`evaluate_with_gradient`].
pub fn finite_difference_gradient<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
