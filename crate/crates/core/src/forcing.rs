//! Temperature forcing functions.
//!
//! Two unit-normalized families are provided: the three-parameter
//! Wang-Engel curve and a beta-shaped curve whose shape exponents are tied
//! to a smoothing parameter `delta` so that the first derivative vanishes
//! at both temperature boundaries.

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingFamily {
    WangEngel,
    SmoothBeta,
}

impl std::str::FromStr for ForcingFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wang-engel" => Ok(Self::WangEngel),
            "smooth-beta" => Ok(Self::SmoothBeta),
            other => Err(Error::Config(format!("unknown forcing family `{other}`"))),
        }
    }
}

/// Cardinal temperatures (degrees C) and the beta-family smoothing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingParams<S = f64> {
    pub t_min: S,
    pub t_opt: S,
    pub t_max: S,
    pub delta: f64,
}

impl<S: Scalar> ForcingParams<S> {
    pub fn new(t_min: S, t_opt: S, t_max: S, delta: f64) -> Result<Self> {
        let p = Self {
            t_min,
            t_opt,
            t_max,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, mid, hi) = (self.t_min.value(), self.t_opt.value(), self.t_max.value());
        if !(lo.is_finite() && mid.is_finite() && hi.is_finite()) {
            return Err(Error::ParameterDomain(
                "forcing temperatures must be finite".into(),
            ));
        }
        if !(lo < mid && mid < hi) {
            return Err(Error::ParameterDomain(format!(
                "require t_min < t_opt < t_max, got ({lo}, {mid}, {hi})"
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WangEngelDerived<S = f64> {
    pub z: S,
    pub z_max: S,
    pub a: S,
}

pub fn wang_engel_derived<S: Scalar>(t: f64, params: &ForcingParams<S>) -> WangEngelDerived<S> {
    let span = params.t_opt - params.t_min;
    let z_max = (params.t_max - params.t_min) / span;
    WangEngelDerived {
        z: (S::cst(t) - params.t_min) / span,
        z_max,
        a: S::cst(std::f64::consts::LN_2) / z_max.ln(),
    }
}

pub fn wang_engel_forcing<S: Scalar>(t: f64, params: &ForcingParams<S>) -> Result<S> {
    params.validate()?;
    Ok(wang_engel_unchecked(t, params))
}

pub(crate) fn wang_engel_unchecked<S: Scalar>(t: f64, params: &ForcingParams<S>) -> S {
    if t <= params.t_min.value() || t >= params.t_max.value() {
        return S::cst(0.0);
    }
    let d = wang_engel_derived(t, params);
    let u = (d.a * d.z.ln()).exp();
    if u.value() >= 2.0 {
        return S::cst(0.0);
    }
    // z^a (2 - z^a) = 1 - (1 - z^a)^2, which cannot round above one.
    let gap = S::cst(1.0) - u;
    S::cst(1.0) - gap * gap
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaExponents<S = f64> {
    pub eta: S,
    pub kappa: S,
    pub gamma_exp: S,
    pub x_opt: S,
    /// Beta shape parameters; both exceed two.
    pub alpha_beta: S,
    pub beta_beta: S,
    /// Normalization that puts the mode at exactly one.
    pub c_norm: S,
}

pub fn smooth_beta_exponents<S: Scalar>(params: &ForcingParams<S>) -> Result<BetaExponents<S>> {
    params.validate()?;
    Ok(beta_exponents_unchecked(params))
}

fn beta_exponents_unchecked<S: Scalar>(params: &ForcingParams<S>) -> BetaExponents<S> {
    let x_opt = (params.t_opt - params.t_min) / (params.t_max - params.t_min);
    if x_opt.value() > 0.5 {
        beta_upper_branch(x_opt, params.delta)
    } else {
        beta_lower_branch(x_opt, params.delta)
    }
}

/// Mode right of centre: `alpha` is pinned by `delta` and `beta` solves for the mode.
fn beta_upper_branch<S: Scalar>(x_opt: S, delta: f64) -> BetaExponents<S> {
    let one = S::cst(1.0);
    let kappa = (one - x_opt) / x_opt;
    let gamma_exp = (x_opt + delta) / (one - x_opt);
    finish_exponents(x_opt, one, kappa, gamma_exp)
}

/// Mode at or left of centre: `beta` is pinned by `delta` and `alpha` solves for the mode.
fn beta_lower_branch<S: Scalar>(x_opt: S, delta: f64) -> BetaExponents<S> {
    let one = S::cst(1.0);
    let eta = x_opt / (one - x_opt);
    let gamma_exp = (one - x_opt + delta) / x_opt;
    finish_exponents(x_opt, eta, one, gamma_exp)
}

fn finish_exponents<S: Scalar>(x_opt: S, eta: S, kappa: S, gamma_exp: S) -> BetaExponents<S> {
    let alpha_beta = gamma_exp * eta + 1.0;
    let beta_beta = gamma_exp * kappa + 1.0;
    let am1 = alpha_beta - 1.0;
    let bm1 = beta_beta - 1.0;
    let sum = am1 + bm1;
    let c_norm = ((am1 * (sum / am1).ln()) + (bm1 * (sum / bm1).ln())).exp();
    BetaExponents {
        eta,
        kappa,
        gamma_exp,
        x_opt,
        alpha_beta,
        beta_beta,
        c_norm,
    }
}

pub fn smooth_beta_forcing<S: Scalar>(t: f64, params: &ForcingParams<S>) -> Result<S> {
    params.validate()?;
    Ok(smooth_beta_unchecked(t, params))
}

pub(crate) fn smooth_beta_unchecked<S: Scalar>(t: f64, params: &ForcingParams<S>) -> S {
    if t <= params.t_min.value() || t >= params.t_max.value() {
        return S::cst(0.0);
    }
    let e = beta_exponents_unchecked(params);
    beta_shape(t, params, &e)
}

fn beta_shape<S: Scalar>(t: f64, params: &ForcingParams<S>, e: &BetaExponents<S>) -> S {
    let t = S::cst(t);
    // Ratios are formed from temperature differences and combined in log
    // space, so x -> 0 or 1 and x_opt -> 0 or 1 never overflow.
    let log_left = ((t - params.t_min) / (params.t_opt - params.t_min)).ln();
    let log_right = ((params.t_max - t) / (params.t_max - params.t_opt)).ln();
    let log_f = e.gamma_exp * (e.eta * log_left + e.kappa * log_right);
    log_f.min_cst(0.0).exp()
}

/// The two parameterizations of the beta exponents, split at `x_opt = 0.5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaBranch {
    /// Pins the left exponent; used for `x_opt > 0.5`.
    Upper,
    /// Pins the right exponent; used for `x_opt <= 0.5`.
    Lower,
}

/// Evaluates the beta family with the exponents of a chosen branch,
/// whatever side of the midpoint the mode lies on. Both branches put the
/// unit mode at `t_opt`; they differ in which exponent `delta` pins, and
/// off its own side a branch can lose boundary smoothness.
pub fn smooth_beta_on_branch<S: Scalar>(t: f64, params: &ForcingParams<S>, branch: BetaBranch) -> Result<S> {
    params.validate()?;
    if t <= params.t_min.value() || t >= params.t_max.value() {
        return Ok(S::cst(0.0));
    }
    let x_opt = (params.t_opt - params.t_min) / (params.t_max - params.t_min);
    let e = match branch {
        BetaBranch::Upper => beta_upper_branch(x_opt, params.delta),
        BetaBranch::Lower => beta_lower_branch(x_opt, params.delta),
    };
    Ok(beta_shape(t, params, &e))
}

/// Evaluates either family.
pub fn forcing<S: Scalar>(family: ForcingFamily, t: f64, params: &ForcingParams<S>) -> Result<S> {
    match family {
        ForcingFamily::WangEngel => wang_engel_forcing(t, params),
        ForcingFamily::SmoothBeta => smooth_beta_forcing(t, params),
    }
}

pub(crate) fn forcing_unchecked<S: Scalar>(
    family: ForcingFamily,
    t: f64,
    params: &ForcingParams<S>,
) -> S {
    match family {
        ForcingFamily::WangEngel => wang_engel_unchecked(t, params),
        ForcingFamily::SmoothBeta => smooth_beta_unchecked(t, params),
    }
}

/// A forcing curve with its parameter-only quantities computed once, for
/// evaluating many temperatures under the same parameters.
#[derive(Clone, Copy, Debug)]
pub struct ForcingCurve<S = f64> {
    params: ForcingParams<S>,
    shape: CurveShape<S>,
}

#[derive(Clone, Copy, Debug)]
enum CurveShape<S> {
    WangEngel { a: S, ln_span: S },
    SmoothBeta { left: S, right: S, ln_dopt: S, ln_dmax: S },
}

impl<S: Scalar> ForcingCurve<S> {
    pub fn new(family: ForcingFamily, params: &ForcingParams<S>) -> Result<Self> {
        params.validate()?;
        Ok(Self::new_unchecked(family, params))
    }

    pub(crate) fn new_unchecked(family: ForcingFamily, params: &ForcingParams<S>) -> Self {
        let shape = match family {
            ForcingFamily::WangEngel => {
                let d = wang_engel_derived(params.t_min.value(), params);
                CurveShape::WangEngel {
                    a: d.a,
                    ln_span: (params.t_opt - params.t_min).ln(),
                }
            }
            ForcingFamily::SmoothBeta => {
                let e = beta_exponents_unchecked(params);
                CurveShape::SmoothBeta {
                    left: e.gamma_exp * e.eta,
                    right: e.gamma_exp * e.kappa,
                    ln_dopt: (params.t_opt - params.t_min).ln(),
                    ln_dmax: (params.t_max - params.t_opt).ln(),
                }
            }
        };
        Self {
            params: *params,
            shape,
        }
    }

    pub fn eval(&self, t: f64) -> S {
        let p = &self.params;
        if t <= p.t_min.value() || t >= p.t_max.value() {
            return S::cst(0.0);
        }
        let ts = S::cst(t);
        match self.shape {
            CurveShape::WangEngel { a, ln_span } => {
                let u = (a * ((ts - p.t_min).ln() - ln_span)).exp();
                if u.value() >= 2.0 {
                    return S::cst(0.0);
                }
                let gap = S::cst(1.0) - u;
                S::cst(1.0) - gap * gap
            }
            CurveShape::SmoothBeta {
                left,
                right,
                ln_dopt,
                ln_dmax,
            } => {
                let log_f = left * ((ts - p.t_min).ln() - ln_dopt)
                    + right * ((p.t_max - ts).ln() - ln_dmax);
                log_f.min_cst(0.0).exp()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lo: f64, mid: f64, hi: f64, delta: f64) -> ForcingParams {
        ForcingParams::new(lo, mid, hi, delta).unwrap()
    }

    #[test]
    fn wang_engel_known_values() {
        let params = p(0.0, 15.0, 40.0, 1.0);
        assert_eq!(wang_engel_forcing(15.0, &params).unwrap(), 1.0);
        assert_eq!(wang_engel_forcing(-5.0, &params).unwrap(), 0.0);
        let d = wang_engel_derived(20.0, &params);
        assert!((d.a - 0.706_695_052_611_424).abs() < 1e-14);
        // oracle: mpmath, z = 4/3, a = log 2 / log(8/3)
        let f = wang_engel_forcing(20.0, &params).unwrap();
        assert!((f - 0.949_174_853_668_027).abs() < 1e-14, "{f}");
    }

    #[test]
    fn ordering_violation_rejected() {
        assert!(ForcingParams::new(10.0, 5.0, 40.0, 1.0).is_err());
        let bad = ForcingParams {
            t_min: 0.0,
            t_opt: 40.0,
            t_max: 40.0,
            delta: 1.0,
        };
        assert!(matches!(
            wang_engel_forcing(1.0, &bad),
            Err(Error::ParameterDomain(_))
        ));
        assert!(smooth_beta_forcing(1.0, &bad).is_err());
        assert!(ForcingParams::new(0.0, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn beta_exponent_branches() {
        let e = smooth_beta_exponents(&p(0.0, 30.0, 40.0, 1.0)).unwrap();
        assert!((e.x_opt - 0.75).abs() < 1e-15);
        assert_eq!(e.eta, 1.0);
        assert!((e.kappa - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.gamma_exp - 7.0).abs() < 1e-13);
        // temperature form of the same exponent
        let temp_form = (1.0 * 40.0 + 30.0 - 2.0 * 0.0) / (40.0 - 30.0);
        assert!((e.gamma_exp - temp_form).abs() < 1e-13);
        assert!(e.alpha_beta > 2.0 && e.beta_beta > 2.0);

        let e = smooth_beta_exponents(&p(0.0, 10.0, 40.0, 1.0)).unwrap();
        assert!((e.eta - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.kappa, 1.0);
        assert!((e.gamma_exp - 7.0).abs() < 1e-13);
        assert!(e.alpha_beta > 2.0 && e.beta_beta > 2.0);
    }

    #[test]
    fn beta_branches_meet_at_midpoint() {
        for &delta in &[0.01, 0.5, 1.0, 3.0] {
            let upper = beta_upper_branch(0.5, delta);
            let lower = beta_lower_branch(0.5, delta);
            assert_eq!((upper.eta, upper.kappa), (1.0, 1.0));
            assert_eq!((lower.eta, lower.kappa), (1.0, 1.0));
            assert!((upper.gamma_exp - (2.0 * delta + 1.0)).abs() < 1e-14);
            assert!((lower.gamma_exp - upper.gamma_exp).abs() < 1e-14);
            let params = p(0.0, 20.0, 40.0, delta);
            for i in 1..40 {
                let t = i as f64;
                let a = beta_shape(t, &params, &upper);
                let b = beta_shape(t, &params, &lower);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smooth_beta_known_values() {
        let params = p(0.0, 30.0, 40.0, 1.0);
        assert_eq!(smooth_beta_forcing(30.0, &params).unwrap(), 1.0);
        let expect = ((2.0f64 / 3.0) * 2f64.powf(1.0 / 3.0)).powi(7);
        let got = smooth_beta_forcing(20.0, &params).unwrap();
        assert!((got - expect).abs() < 1e-14);
        assert!((got - 0.294_96).abs() < 1e-5);
        assert_eq!(smooth_beta_forcing(40.0, &params).unwrap(), 0.0);
        let h = 1e-4;
        let slope = (smooth_beta_forcing(40.0 + h, &params).unwrap()
            - smooth_beta_forcing(40.0 - h, &params).unwrap())
            / (2.0 * h);
        assert!(slope.abs() < 1e-6);
    }

    #[test]
    fn normalization_constant_matches_unit_mode() {
        let params = p(-3.0, 11.0, 35.0, 0.7);
        let e = smooth_beta_exponents(&params).unwrap();
        let x = e.x_opt;
        let direct = e.c_norm * x.powf(e.alpha_beta - 1.0) * (1.0 - x).powf(e.beta_beta - 1.0);
        assert!((direct - 1.0).abs() < 1e-12);
        // mode of the beta density sits at x_opt
        let mode = (e.alpha_beta - 1.0) / (e.alpha_beta + e.beta_beta - 2.0);
        assert!((mode - x).abs() < 1e-14);
    }

    #[test]
    fn extreme_mode_stays_finite() {
        for &(mid, t) in &[(1e-9, 5.0), (40.0 - 1e-9, 1e-6), (40.0 - 1e-9, 39.999)] {
            let params = p(0.0, mid, 40.0, 1.0);
            let f = smooth_beta_forcing(t, &params).unwrap();
            assert!(f.is_finite() && (0.0..=1.0).contains(&f), "{mid} {t} {f}");
        }
    }
}
