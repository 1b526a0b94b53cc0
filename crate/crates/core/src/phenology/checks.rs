//! Binned event-day histograms and posterior retrodictive quantile ribbons.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::ObservationSet;
use super::synthetic::simulate_outcome;
use crate::error::{Error, Result};
use crate::inference::diagnostics::quantile_sorted;
use crate::inference::{ModelTemplate, ParameterBlock};
use crate::survival::EventOutcome;

pub const QUANTILE_LEVELS: [u32; 9] = [10, 20, 30, 40, 50, 60, 70, 80, 90];
pub const MIN_DRAWS: usize = 100;

/// Equal-width bins `(lo + k w, lo + (k + 1) w]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub width: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self {
            width: 15.0,
            lo: -0.5,
            hi: 374.5,
        }
    }
}

impl BinSpec {
    pub fn validate(&self) -> Result<()> {
        let n = (self.hi - self.lo) / self.width;
        if !(self.width > 0.0 && n >= 1.0 && (n - n.round()).abs() < 1e-9) {
            return Err(Error::Config(format!(
                "bin width {} does not divide [{}, {}] into whole bins",
                self.width, self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        ((self.hi - self.lo) / self.width).round() as usize
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_bins()).map(|k| self.lo + k as f64 * self.width).collect()
    }

    /// Bin of `day`, and whether it had to be clamped into an edge bin.
    fn index(&self, day: f64) -> (usize, bool) {
        let n = self.n_bins();
        let k = ((day - self.lo) / self.width).ceil() - 1.0;
        if !(k >= 0.0) {
            (0, true)
        } else if k >= n as f64 {
            (n - 1, true)
        } else {
            (k as usize, false)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinnedCounts {
    pub counts: Vec<u64>,
    /// Occurred days outside the binned range, counted in the nearest edge bin.
    pub out_of_range: usize,
}

/// Histogram of event days. Occurred days are truncated to their day
/// number; censored outcomes land in the final bin.
pub fn bin_events(outcomes: &[EventOutcome], spec: &BinSpec) -> Result<BinnedCounts> {
    spec.validate()?;
    let n = spec.n_bins();
    let mut counts = vec![0u64; n];
    let mut out_of_range = 0;
    for o in outcomes {
        let k = match *o {
            EventOutcome::Occurred { day } => {
                let (k, clamped) = spec.index(day.floor());
                out_of_range += clamped as usize;
                k
            }
            EventOutcome::Censored { .. } => n - 1,
        };
        counts[k] += 1;
    }
    Ok(BinnedCounts {
        counts,
        out_of_range,
    })
}

/// Observed outcomes, censored ones placed at the end of their year.
pub fn observed_outcomes(data: &ObservationSet) -> Result<Vec<EventOutcome>> {
    data.observations
        .iter()
        .map(|o| match o.end_day {
            Some(day) if !o.censored => Ok(EventOutcome::Occurred { day: day as f64 }),
            _ => Ok(EventOutcome::Censored {
                at: (data.series(o.year)?.len_days() + 1) as f64,
            }),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RibbonSummary {
    pub bin_edges: Vec<f64>,
    pub observed: Vec<u64>,
    /// `q10` through `q90`, one value per bin.
    pub quantiles: BTreeMap<String, Vec<f64>>,
    pub median: Vec<f64>,
    pub n_censored_replicates: usize,
    pub skipped_draws: usize,
    pub out_of_range_replicates: usize,
}

impl RibbonSummary {
    pub fn band(&self, level: u32) -> Option<&[f64]> {
        self.quantiles.get(&format!("q{level}")).map(|v| v.as_slice())
    }

    /// Number of bins whose observed count lies within `[q_lo, q_hi]`.
    pub fn bins_within(&self, lo: u32, hi: u32) -> Result<usize> {
        let (Some(l), Some(h)) = (self.band(lo), self.band(hi)) else {
            return Err(Error::Config(format!("no quantile band q{lo} or q{hi}")));
        };
        Ok(self
            .observed
            .iter()
            .zip(l.iter().zip(h))
            .filter(|(&o, (&l, &h))| (o as f64) >= l && (o as f64) <= h)
            .count())
    }
}

/// Simulates one replicate dataset per posterior draw and summarizes the
/// per-bin count distribution against the observed histogram.
///
/// Each draw uses its own random stream, so the result depends only on
/// `seed` and the order of `draws`.
pub fn retrodictive_histograms(
    draws: &[ParameterBlock],
    data: &ObservationSet,
    template: &ModelTemplate,
    seed: u64,
    bins: &BinSpec,
) -> Result<RibbonSummary> {
    bins.validate()?;
    if draws.len() < MIN_DRAWS {
        return Err(Error::Config(format!(
            "retrodictive checks need at least {MIN_DRAWS} draws, got {}",
            draws.len()
        )));
    }
    let observed = bin_events(&observed_outcomes(data)?, bins)?;
    let replicates: Vec<Option<(BinnedCounts, usize)>> = draws
        .par_iter()
        .enumerate()
        .map(|(i, block)| -> Result<Option<(BinnedCounts, usize)>> {
            if !block.all_finite() {
                return Ok(None);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut outcomes = Vec::with_capacity(data.len());
            for obs in &data.observations {
                let series = data.series(obs.year)?;
                match simulate_outcome(series, template, block, obs.start_day, &mut rng) {
                    Ok(o) => outcomes.push(o),
                    Err(Error::ParameterDomain(_)) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            let censored = outcomes
                .iter()
                .filter(|o| matches!(o, EventOutcome::Censored { .. }))
                .count();
            Ok(Some((bin_events(&outcomes, bins)?, censored)))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<&(BinnedCounts, usize)> = replicates.iter().flatten().collect();
    let skipped_draws = replicates.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::Data("every posterior draw was unusable".into()));
    }
    let n_bins = bins.n_bins();
    let per_bin: Vec<Vec<f64>> = (0..n_bins)
        .map(|b| {
            let mut v: Vec<f64> = kept.iter().map(|(c, _)| c.counts[b] as f64).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let quantiles: BTreeMap<String, Vec<f64>> = QUANTILE_LEVELS
        .iter()
        .map(|&l| {
            let p = l as f64 / 100.0;
            (format!("q{l}"), per_bin.iter().map(|v| quantile_sorted(v, p)).collect())
        })
        .collect();
    Ok(RibbonSummary {
        bin_edges: bins.edges(),
        observed: observed.counts,
        median: quantiles["q50"].clone(),
        quantiles,
        n_censored_replicates: kept.iter().map(|(_, c)| c).sum(),
        skipped_draws,
        out_of_range_replicates: kept.iter().map(|(c, _)| c.out_of_range).sum(),
    })
}
