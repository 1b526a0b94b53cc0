//! Priors, parameter transforms, posterior assembly, HMC and diagnostics.

pub mod diagnostics;
pub mod fit;
pub mod hmc;
pub mod model;
pub mod posterior;
pub mod prior;
pub mod transform;

pub use diagnostics::{compute_diagnostics, Diagnostics, ParameterSummary, TruncationReport};
pub use fit::{fit, FitDocument, FitResult, FitSettings};
pub use hmc::{leapfrog, run_hmc, ChainDraws, HmcConfig, LogDensity, PhasePoint};
pub use model::{LikelihoodForm, ModelKind, ModelTemplate, ParameterBlock};
pub use posterior::PhenologyPosterior;
pub use prior::{Prior, PriorConfig};
pub use transform::{to_constrained, to_unconstrained};
