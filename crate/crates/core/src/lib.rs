//! Survival models with warped cumulative hazards, temperature forcing,
//! and Bayesian inference for event timing driven by accumulated forcing.
//!
//! The soft-threshold model suppresses the hazard until accumulated forcing
//! approaches a threshold, giving event densities of the form
//! `lambda(t) * logistic(Lambda(t); Lambda0, alpha)`.

pub mod autodiff;
pub mod error;
pub mod forcing;
pub mod inference;
pub mod math;
pub mod phenology;
pub mod selftest;
pub mod survival;
pub mod warping;

pub use autodiff::{evaluate_with_gradient, finite_difference_gradient, Dual, Scalar};
pub use error::{Error, Result};
pub use forcing::{
    forcing, smooth_beta_exponents, smooth_beta_on_branch, BetaBranch, smooth_beta_forcing, wang_engel_derived, wang_engel_forcing,
    BetaExponents, ForcingCurve, ForcingFamily, ForcingParams, WangEngelDerived,
};
pub use inference::{
    compute_diagnostics, fit, run_hmc, to_constrained, ChainDraws, Diagnostics, FitDocument, FitResult,
    FitSettings, HmcConfig, LikelihoodForm, LogDensity, ModelKind, ModelTemplate, ParameterBlock,
    PhenologyPosterior, Prior, PriorConfig,
};
pub use phenology::{
    bin_events, conventional_log_lik, parse_event_table, parse_temperature_table, retrodictive_histograms,
    BinSpec, EventObservation, ObservationSet, RibbonSummary, TemperatureSeries,
};
pub use survival::{
    accumulate_forcing, censored_log_prob, cumulative_hazard_at, day_log_prob, event_log_density,
    log_survival_at, sample_event_time, survival_at, truncation_mass, EventOutcome, HazardPath, LogProb,
    ModelSpec,
};
pub use warping::{induced_warping, warp_deriv, warp_inverse, warp_value, DensityFamily, InducedDensitySpec, WarpingSpec};
