use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::forcing::{ForcingFamily, ForcingParams};
use crate::survival::ModelSpec;
use crate::warping::{DensityFamily, InducedDensitySpec, WarpingSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Exponential survival, `S = exp(-gamma * Psi)`.
    Standard,
    /// Soft-threshold warping parameterized by `(psi0, sigma)`.
    Threshold,
    /// Warping induced by a normal density on accumulated forcing.
    InducedNormal,
    /// Normal density on the accumulated forcing at the event day.
    Conventional,
}

impl ModelKind {
    pub fn unconstrained_names(&self) -> &'static [&'static str] {
        match self {
            Self::Standard => &["t_min", "log_d_opt", "log_d_max", "log_gamma"],
            _ => &["t_min", "log_d_opt", "log_d_max", "log_psi0", "log_sigma"],
        }
    }

    pub fn constrained_names(&self) -> &'static [&'static str] {
        match self {
            Self::Standard => &["t_min", "t_opt", "t_max", "gamma"],
            _ => &["t_min", "t_opt", "t_max", "psi0", "sigma"],
        }
    }

    pub fn dim(&self) -> usize {
        self.unconstrained_names().len()
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "threshold" => Ok(Self::Threshold),
            "induced-normal" => Ok(Self::InducedNormal),
            "conventional" => Ok(Self::Conventional),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodForm {
    /// `S(n) - S(n + 1)` for an event observed on day `n`.
    #[default]
    DayInterval,
    /// Event density at the middle of the observed day.
    Continuous,
}

/// Constrained parameters of a phenology model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterBlock<S = f64> {
    pub t_min: S,
    /// `t_opt - t_min`, positive.
    pub d_opt: S,
    /// `t_max - t_opt`, positive.
    pub d_max: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi0: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<S>,
}

impl<S: Scalar> ParameterBlock<S> {
    pub fn t_opt(&self) -> S {
        self.t_min + self.d_opt
    }

    pub fn t_max(&self) -> S {
        self.t_opt() + self.d_max
    }

    pub fn forcing(&self, delta: f64) -> ForcingParams<S> {
        ForcingParams {
            t_min: self.t_min,
            t_opt: self.t_opt(),
            t_max: self.t_max(),
            delta,
        }
    }

    /// Values in the order of [`ModelKind::constrained_names`].
    pub fn constrained_values(&self, kind: ModelKind) -> Vec<f64> {
        let mut v = vec![self.t_min.value(), self.t_opt().value(), self.t_max().value()];
        match kind {
            ModelKind::Standard => v.push(self.gamma.map_or(f64::NAN, |g| g.value())),
            _ => {
                v.push(self.psi0.map_or(f64::NAN, |p| p.value()));
                v.push(self.sigma.map_or(f64::NAN, |s| s.value()));
            }
        }
        v
    }

    fn require(&self, name: &str, v: Option<S>) -> Result<S> {
        v.ok_or_else(|| Error::Config(format!("parameter `{name}` is required for this model")))
    }

    pub fn all_finite(&self) -> bool {
        [Some(self.t_min), Some(self.d_opt), Some(self.d_max), self.psi0, self.sigma, self.gamma]
            .iter()
            .flatten()
            .all(|v| v.is_finite())
    }
}

impl ParameterBlock<f64> {
    /// Builds a block from cardinal temperatures rather than increments.
    pub fn from_temperatures(
        t_min: f64,
        t_opt: f64,
        t_max: f64,
        psi0: Option<f64>,
        sigma: Option<f64>,
        gamma: Option<f64>,
    ) -> Self {
        Self {
            t_min,
            d_opt: t_opt - t_min,
            d_max: t_max - t_opt,
            psi0,
            sigma,
            gamma,
        }
    }
}

/// The fixed, non-inferred parts of a phenology model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelTemplate {
    pub kind: ModelKind,
    pub forcing_family: ForcingFamily,
    pub delta: f64,
}

impl ModelTemplate {
    pub fn new(kind: ModelKind, forcing_family: ForcingFamily, delta: f64) -> Self {
        Self {
            kind,
            forcing_family,
            delta,
        }
    }

    /// Assembles the survival model for a parameter block.
    ///
    /// Threshold-type models are evaluated on the accumulated-forcing scale.
    /// Passing `hazard_convention = Some(c)` instead writes them with hazard
    /// scale `c`, threshold `c * psi0` and warping scale `c * sigma`; the
    /// event distribution is the same for every `c`.
    pub fn survival_spec<S: Scalar>(
        &self,
        block: &ParameterBlock<S>,
        hazard_convention: Option<f64>,
    ) -> Result<ModelSpec<S>> {
        let forcing = block.forcing(self.delta);
        let (warping, hazard_scale, threshold_parameterization) = match self.kind {
            ModelKind::Standard => (
                WarpingSpec::Identity,
                block.require("gamma", block.gamma)?,
                false,
            ),
            ModelKind::Threshold | ModelKind::InducedNormal => {
                let psi0 = block.require("psi0", block.psi0)?;
                let sigma = block.require("sigma", block.sigma)?;
                let c = hazard_convention.unwrap_or(1.0);
                let (loc, scale) = (psi0 * c, sigma * c);
                let warping = if self.kind == ModelKind::Threshold {
                    WarpingSpec::SoftThreshold {
                        lambda0: loc,
                        alpha: scale,
                    }
                } else {
                    WarpingSpec::Induced(InducedDensitySpec {
                        family: DensityFamily::Normal,
                        location: loc,
                        scale,
                        shape: None,
                    })
                };
                (warping, S::cst(c), hazard_convention.is_none())
            }
            ModelKind::Conventional => {
                return Err(Error::Unsupported(
                    "the conventional model is not a survival model".into(),
                ))
            }
        };
        Ok(ModelSpec {
            family: self.forcing_family,
            forcing,
            warping,
            hazard_scale,
            threshold_parameterization,
        })
    }
}
