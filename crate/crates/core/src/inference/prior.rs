use serde::{Deserialize, Serialize};

use super::model::{ModelKind, ParameterBlock};
use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::math::{normal_log_density, LN_2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Prior {
    Normal { location: f64, scale: f64 },
    HalfNormal { scale: f64 },
    /// `location` is the mean of the log, i.e. the log of the median.
    LogNormal { location: f64, scale: f64 },
}

impl Prior {
    pub fn log_density<S: Scalar>(&self, x: S) -> S {
        match *self {
            Prior::Normal { location, scale } => {
                normal_log_density(x, S::cst(location), S::cst(scale))
            }
            Prior::HalfNormal { scale } => {
                normal_log_density(x, S::cst(0.0), S::cst(scale)) + LN_2
            }
            Prior::LogNormal { location, scale } => {
                let lx = x.ln();
                normal_log_density(lx, S::cst(location), S::cst(scale)) - lx
            }
        }
    }

    pub fn median(&self) -> f64 {
        match *self {
            Prior::Normal { location, .. } => location,
            // median of |Z| for standard normal Z
            Prior::HalfNormal { scale } => 0.674_489_750_196_081_7 * scale,
            Prior::LogNormal { location, .. } => location.exp(),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let scale = match *self {
            Prior::Normal { location, scale } | Prior::LogNormal { location, scale } => {
                if !location.is_finite() {
                    return Err(Error::Config(format!("prior on {name}: location must be finite")));
                }
                scale
            }
            Prior::HalfNormal { scale } => scale,
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("prior on {name}: scale must be positive")));
        }
        Ok(())
    }

    fn supports_negative(&self) -> bool {
        matches!(self, Prior::Normal { .. })
    }
}

/// Priors on the constrained parameters. The parameter-specific defaults
/// are weakly informative and meant to be overridden.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub t_min: Prior,
    pub d_opt: Prior,
    pub d_max: Prior,
    pub psi0: Prior,
    pub sigma: Prior,
    pub gamma: Prior,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            t_min: Prior::Normal {
                location: 0.0,
                scale: 5.0,
            },
            d_opt: Prior::LogNormal {
                location: 15f64.ln(),
                scale: 0.5,
            },
            d_max: Prior::LogNormal {
                location: 10f64.ln(),
                scale: 0.5,
            },
            psi0: Prior::LogNormal {
                location: 40f64.ln(),
                scale: 1.0,
            },
            sigma: Prior::HalfNormal { scale: 5.0 },
            gamma: Prior::HalfNormal { scale: 1.0 },
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        self.t_min.validate("t_min")?;
        for (name, p) in [
            ("d_opt", &self.d_opt),
            ("d_max", &self.d_max),
            ("psi0", &self.psi0),
            ("sigma", &self.sigma),
            ("gamma", &self.gamma),
        ] {
            p.validate(name)?;
            if p.supports_negative() {
                return Err(Error::Config(format!(
                    "prior on {name} must be half-normal or log-normal"
                )));
            }
        }
        Ok(())
    }

    /// Parameters at every prior median.
    pub fn median_block(&self, kind: ModelKind) -> ParameterBlock {
        let mut b = ParameterBlock {
            t_min: self.t_min.median(),
            d_opt: self.d_opt.median(),
            d_max: self.d_max.median(),
            psi0: None,
            sigma: None,
            gamma: None,
        };
        match kind {
            ModelKind::Standard => b.gamma = Some(self.gamma.median()),
            _ => {
                b.psi0 = Some(self.psi0.median());
                b.sigma = Some(self.sigma.median());
            }
        }
        b
    }

    pub fn log_density<S: Scalar>(&self, block: &ParameterBlock<S>, kind: ModelKind) -> S {
        let mut lp = self.t_min.log_density(block.t_min)
            + self.d_opt.log_density(block.d_opt)
            + self.d_max.log_density(block.d_max);
        match kind {
            ModelKind::Standard => {
                if let Some(g) = block.gamma {
                    lp += self.gamma.log_density(g);
                }
            }
            _ => {
                if let Some(p) = block.psi0 {
                    lp += self.psi0.log_density(p);
                }
                if let Some(s) = block.sigma {
                    lp += self.sigma.log_density(s);
                }
            }
        }
        lp
    }
}
