//! Overflow-safe elementary functions shared by the forcing, warping and
//! survival code.

use crate::autodiff::Scalar;

pub const LN_2: f64 = std::f64::consts::LN_2;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(1 + e^x)`, returning `x` itself once `e^x` would swamp the one.
pub fn softplus<S: Scalar>(x: S) -> S {
    let v = x.value();
    if v > 36.0 {
        // ln(1 + e^-x) is below double precision here.
        if v > 710.0 {
            x
        } else {
            x + (-x).exp()
        }
    } else if v > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(1 / (1 + e^-x))`.
pub fn log_sigmoid<S: Scalar>(x: S) -> S {
    -softplus(-x)
}

pub fn sigmoid<S: Scalar>(x: S) -> S {
    log_sigmoid(x).exp()
}

/// `ln(a - b)` given `ln a` and `ln b` with `a > b`.
pub fn log_diff_exp<S: Scalar>(log_a: S, log_b: S) -> S {
    log_a + log1m_exp(log_b - log_a)
}

/// `ln(1 - e^x)` for `x < 0`.
pub fn log1m_exp<S: Scalar>(x: S) -> S {
    if x.value() > -LN_2 {
        (-(x.expm1())).ln()
    } else {
        (-(x.exp())).ln_1p()
    }
}

/// Natural log of the complementary error function.
///
/// Uses the continued asymptotic series once `erfc` would lose relative
/// precision to underflow.
pub fn ln_erfc_f64(x: f64) -> f64 {
    if x < 25.0 {
        libm::erfc(x).ln()
    } else {
        let inv2 = 1.0 / (x * x);
        // 1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6) + 105/(16x^8) - 945/(32x^10)
        let series = 1.0
            + inv2
                * (-0.5
                    + inv2 * (0.75 + inv2 * (-1.875 + inv2 * (6.5625 + inv2 * -29.53125))));
        -x * x - (x * std::f64::consts::PI.sqrt()).ln() + series.ln()
    }
}

/// Log density of a normal distribution.
pub fn normal_log_density<S: Scalar>(x: S, loc: S, scale: S) -> S {
    let z = (x - loc) / scale;
    -(z.square() * 0.5) - scale.ln() - LN_SQRT_2PI
}

/// `ln(1 - Phi(z))` for the standard normal.
pub fn std_normal_log_ccdf<S: Scalar>(z: S) -> S {
    (z / std::f64::consts::SQRT_2).ln_erfc() - LN_2
}

/// `ln(Phi(z))` for the standard normal.
pub fn std_normal_log_cdf<S: Scalar>(z: S) -> S {
    std_normal_log_ccdf(-z)
}

pub fn std_normal_inv_cdf(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    // Standard normal construction cannot fail.
    Normal::standard().inverse_cdf(p)
}
