//! Warping functions applied to the cumulative hazard before
//! exponentiation, `S(t) = exp(-g(Lambda(t)))`.

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::math::{
    log1m_exp, log_sigmoid, normal_log_density, sigmoid, softplus, std_normal_inv_cdf, std_normal_log_cdf,
    std_normal_log_ccdf,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityFamily {
    Normal,
    Logistic,
}

/// A location-scale density over cumulative hazard that induces a warping
/// `g = -ln(Omega_c)`, with `Omega_c` its complementary CDF.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedDensitySpec<S = f64> {
    pub family: DensityFamily,
    pub location: S,
    pub scale: S,
    /// Reserved for non-location-scale families; ignored by both built-ins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WarpingSpec<S = f64> {
    Identity,
    /// `max(lam - lambda0, 0)`. Not differentiable at the threshold, so it is
    /// kept for comparison and never used for gradient-based fitting.
    Hinge { lambda0: S },
    /// `ln(1 + exp((lam - lambda0) / alpha))`.
    SoftThreshold { lambda0: S, alpha: S },
    Induced(InducedDensitySpec<S>),
}

impl<S: Scalar> WarpingSpec<S> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Identity => Ok(()),
            Self::Hinge { lambda0 } => finite("lambda0", lambda0.value()),
            Self::SoftThreshold { lambda0, alpha } => {
                finite("lambda0", lambda0.value())?;
                positive("alpha", alpha.value())
            }
            Self::Induced(d) => {
                finite("location", d.location.value())?;
                positive("scale", d.scale.value())
            }
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("{name} must be finite, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("{name} must be positive, got {v}")))
    }
}

fn check_arg(lam: f64) -> Result<()> {
    if lam.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("cumulative hazard must be finite, got {lam}")))
    }
}

pub fn induced_warping<S: Scalar>(density: InducedDensitySpec<S>) -> Result<WarpingSpec<S>> {
    let spec = WarpingSpec::Induced(density);
    spec.validate()?;
    Ok(spec)
}

pub fn warp_value<S: Scalar>(spec: &WarpingSpec<S>, lam: S) -> Result<S> {
    spec.validate()?;
    check_arg(lam.value())?;
    Ok(value_unchecked(spec, lam))
}

/// `dg/dlam`, always non-negative. The hinge derivative at exactly
/// `lambda0` is taken from the right and reported as one.
pub fn warp_deriv<S: Scalar>(spec: &WarpingSpec<S>, lam: S) -> Result<S> {
    spec.validate()?;
    check_arg(lam.value())?;
    Ok(match spec {
        WarpingSpec::Hinge { lambda0 } => {
            if lam.value() >= lambda0.value() {
                S::cst(1.0)
            } else {
                S::cst(0.0)
            }
        }
        _ => log_deriv_unchecked(spec, lam).exp(),
    })
}

/// Whether `lam` sits exactly on the hinge kink, where [`warp_deriv`]
/// reports the right derivative.
pub fn at_hinge_kink<S: Scalar>(spec: &WarpingSpec<S>, lam: f64) -> bool {
    matches!(spec, WarpingSpec::Hinge { lambda0 } if lambda0.value() == lam)
}

pub(crate) fn value_unchecked<S: Scalar>(spec: &WarpingSpec<S>, lam: S) -> S {
    match spec {
        WarpingSpec::Identity => lam,
        WarpingSpec::Hinge { lambda0 } => (lam - *lambda0).max_cst(0.0),
        WarpingSpec::SoftThreshold { lambda0, alpha } => softplus((lam - *lambda0) / *alpha),
        WarpingSpec::Induced(d) => {
            let z = (lam - d.location) / d.scale;
            match d.family {
                DensityFamily::Normal => -std_normal_log_ccdf(z),
                DensityFamily::Logistic => softplus(z),
            }
        }
    }
}

/// `ln(dg/dlam)`; negative infinity where the derivative vanishes.
pub(crate) fn log_deriv_unchecked<S: Scalar>(spec: &WarpingSpec<S>, lam: S) -> S {
    match spec {
        WarpingSpec::Identity => S::cst(0.0),
        WarpingSpec::Hinge { lambda0 } => {
            if lam.value() >= lambda0.value() {
                S::cst(0.0)
            } else {
                S::cst(f64::NEG_INFINITY)
            }
        }
        WarpingSpec::SoftThreshold { lambda0, alpha } => {
            log_sigmoid((lam - *lambda0) / *alpha) - alpha.ln()
        }
        WarpingSpec::Induced(d) => {
            let z = (lam - d.location) / d.scale;
            match d.family {
                DensityFamily::Normal => {
                    normal_log_density(z, S::cst(0.0), S::cst(1.0))
                        - std_normal_log_ccdf(z)
                        - d.scale.ln()
                }
                DensityFamily::Logistic => log_sigmoid(z) - d.scale.ln(),
            }
        }
    }
}

/// `ln(1 - exp(-g(lam)))`, the log probability that the event has already
/// happened, computed without cancellation when `g` is tiny.
pub(crate) fn log_occurred_unchecked<S: Scalar>(spec: &WarpingSpec<S>, lam: S) -> S {
    match spec {
        WarpingSpec::SoftThreshold { lambda0, alpha } => log_sigmoid((lam - *lambda0) / *alpha),
        WarpingSpec::Induced(d) => {
            let z = (lam - d.location) / d.scale;
            match d.family {
                DensityFamily::Normal => std_normal_log_cdf(z),
                DensityFamily::Logistic => log_sigmoid(z),
            }
        }
        _ => {
            let g = value_unchecked(spec, lam);
            if g.value() <= 0.0 {
                S::cst(f64::NEG_INFINITY)
            } else {
                log1m_exp(-g)
            }
        }
    }
}

/// `g(lam + width) - g(lam)` for `width >= 0`, without differencing two
/// large warp values when the interval is short.
pub(crate) fn gap_unchecked<S: Scalar>(spec: &WarpingSpec<S>, lam: S, width: S) -> S {
    match spec {
        WarpingSpec::Identity => width,
        WarpingSpec::Hinge { .. } => value_unchecked(spec, lam + width) - value_unchecked(spec, lam),
        WarpingSpec::SoftThreshold { lambda0, alpha } => {
            logistic_gap((lam - *lambda0) / *alpha, width / *alpha)
        }
        WarpingSpec::Induced(d) => {
            let z = (lam - d.location) / d.scale;
            let dz = width / d.scale;
            match d.family {
                DensityFamily::Logistic => logistic_gap(z, dz),
                DensityFamily::Normal => short_gap(z, dz, |x| -std_normal_log_ccdf(x), |x| {
                    normal_log_density(x, S::cst(0.0), S::cst(1.0)) - std_normal_log_ccdf(x)
                }),
            }
        }
    }
}

/// `f(lam + width) - f(lam)` with `f` from [`log_occurred_unchecked`], for
/// the smooth warps.
pub(crate) fn occurred_gap_unchecked<S: Scalar>(spec: &WarpingSpec<S>, lam: S, width: S) -> S {
    match spec {
        WarpingSpec::SoftThreshold { lambda0, alpha } => {
            logistic_gap(-(lam + width - *lambda0) / *alpha, width / *alpha)
        }
        WarpingSpec::Induced(d) => {
            let z = (lam - d.location) / d.scale;
            let dz = width / d.scale;
            match d.family {
                DensityFamily::Logistic => logistic_gap(-(z + dz), dz),
                DensityFamily::Normal => short_gap(z, dz, std_normal_log_cdf, |x| {
                    normal_log_density(x, S::cst(0.0), S::cst(1.0)) - std_normal_log_cdf(x)
                }),
            }
        }
        _ => log_occurred_unchecked(spec, lam + width) - log_occurred_unchecked(spec, lam),
    }
}

/// `softplus(x + d) - softplus(x) = ln(1 + sigmoid(x) expm1(d))`.
fn logistic_gap<S: Scalar>(x: S, d: S) -> S {
    (sigmoid(x) * d.expm1()).ln_1p()
}

/// `h(z + dz) - h(z)`, by Simpson's rule on `h' = exp(log_slope)` when
/// `dz` is short and by direct differencing otherwise.
fn short_gap<S: Scalar>(z: S, dz: S, h: impl Fn(S) -> S, log_slope: impl Fn(S) -> S) -> S {
    if dz.value() < 1e-3 {
        let mid = z + dz * 0.5;
        dz * (log_slope(z).exp() + log_slope(mid).exp() * 4.0 + log_slope(z + dz).exp()) * (1.0 / 6.0)
    } else {
        h(z + dz) - h(z)
    }
}

/// Solves `g(lam) = y` for `y >= 0`. Where `g` is flat (identity below
/// zero, hinge below its threshold) the upper end of the flat region is
/// returned.
pub fn warp_inverse(spec: &WarpingSpec<f64>, y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("warp target must be non-negative, got {y}")));
    }
    Ok(match spec {
        WarpingSpec::Identity => y,
        WarpingSpec::Hinge { lambda0 } => lambda0 + y,
        WarpingSpec::SoftThreshold { lambda0, alpha } => lambda0 + alpha * inv_softplus(y),
        WarpingSpec::Induced(d) => {
            let z = match d.family {
                DensityFamily::Logistic => inv_softplus(y),
                DensityFamily::Normal => {
                    let survive = (-y).exp();
                    if survive < 0.5 {
                        -std_normal_inv_cdf(survive)
                    } else {
                        std_normal_inv_cdf(-(-y).exp_m1())
                    }
                }
            };
            d.location + d.scale * z
        }
    })
}

/// `ln(e^y - 1)`.
fn inv_softplus(y: f64) -> f64 {
    if y == 0.0 {
        f64::NEG_INFINITY
    } else {
        y + log1m_exp(-y)
    }
}
