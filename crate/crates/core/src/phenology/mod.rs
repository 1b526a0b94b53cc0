//! Phenology data, the conventional threshold baseline, simulation and
//! retrodictive checks.

pub mod checks;
pub mod conventional;
pub mod data;
pub mod synthetic;

pub use checks::{bin_events, observed_outcomes, retrodictive_histograms, BinSpec, BinnedCounts, RibbonSummary};
pub use conventional::conventional_log_lik;
pub use data::{
    parse_event_table, parse_temperature_table, write_event_table, write_temperature_table,
    EventObservation, ObservationSet, TemperatureSeries,
};
pub use synthetic::{seasonal_series, simulate_events, simulate_outcome, SeasonalConfig};
