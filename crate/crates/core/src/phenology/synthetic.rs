//! Synthetic temperature years and event simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::data::{EventObservation, TemperatureSeries};
use crate::error::{Error, Result};
use crate::forcing::ForcingCurve;
use crate::inference::{ModelKind, ModelTemplate, ParameterBlock};
use crate::survival::{accumulate_forcing, sample_event_time, EventOutcome};

/// Smooth annual temperature cycle with a per-year offset and AR(1) daily
/// noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeasonalConfig {
    pub mean_c: f64,
    pub amplitude_c: f64,
    /// Day of year of the warmest point of the cycle.
    pub peak_day: f64,
    pub year_sd: f64,
    pub noise_sd: f64,
    pub noise_ar: f64,
}

impl Default for SeasonalConfig {
    fn default() -> Self {
        Self {
            mean_c: 13.0,
            amplitude_c: 9.0,
            peak_day: 200.0,
            year_sd: 1.0,
            noise_sd: 1.5,
            noise_ar: 0.7,
        }
    }
}

/// `n_years` consecutive 365-day years starting at `first_year`.
pub fn seasonal_series(first_year: i32, n_years: usize, cfg: &SeasonalConfig, seed: u64) -> Vec<TemperatureSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = (1.0 - cfg.noise_ar * cfg.noise_ar).max(0.0).sqrt() * cfg.noise_sd;
    (0..n_years)
        .map(|y| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let offset = cfg.year_sd * z;
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut noise = cfg.noise_sd * z;
            let temps = (1..=365)
                .map(|d| {
                    let phase = 2.0 * std::f64::consts::PI * (d as f64 - cfg.peak_day) / 365.0;
                    let t = cfg.mean_c + offset + cfg.amplitude_c * phase.cos() + noise;
                    let e: f64 = StandardNormal.sample(&mut rng);
                    noise = cfg.noise_ar * noise + innovation * e;
                    t
                })
                .collect();
            TemperatureSeries {
                year: first_year + y as i32,
                temps_c: temps,
            }
        })
        .collect()
}

fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Simulates one event starting on `start_day` under the model.
///
/// Survival-type models invert the survival function; the conventional
/// model draws a threshold and reports the first day whose accumulated
/// forcing, counted through the end of that day, reaches it.
pub fn simulate_outcome(
    series: &TemperatureSeries,
    template: &ModelTemplate,
    block: &ParameterBlock,
    start_day: u32,
    rng: &mut impl Rng,
) -> Result<EventOutcome> {
    let forcing = block.forcing(template.delta);
    forcing.validate()?;
    if template.kind == ModelKind::Conventional {
        let (Some(psi0), Some(sigma)) = (block.psi0, block.sigma) else {
            return Err(Error::Config("conventional model needs psi0 and sigma".into()));
        };
        let threshold = Normal::new(psi0, sigma)
            .map_err(|e| Error::ParameterDomain(e.to_string()))?
            .sample(rng);
        let curve = ForcingCurve::new(template.forcing_family, &forcing)?;
        let temps = series.days_from(start_day as f64)?;
        let mut acc = 0.0;
        for (k, &t) in temps.iter().enumerate() {
            acc += curve.eval(t);
            if acc >= threshold {
                return Ok(EventOutcome::Occurred {
                    day: (start_day as usize + k) as f64,
                });
            }
        }
        return Ok(EventOutcome::Censored {
            at: (series.len_days() + 1) as f64,
        });
    }
    let spec = template.survival_spec(block, None)?;
    spec.validate()?;
    let path = accumulate_forcing(series, &spec, start_day as f64)?;
    sample_event_time(&path, &spec, open_unit(rng))
}

/// Converts a simulated outcome to a day-resolution observation.
///
/// Events inside the start day itself are reported on the following day,
/// since observations require the event to follow the start.
pub fn outcome_to_observation(year: i32, start_day: u32, outcome: EventOutcome) -> EventObservation {
    match outcome {
        EventOutcome::Occurred { day } => EventObservation {
            year,
            start_day,
            end_day: Some((day.floor() as u32).max(start_day + 1)),
            censored: false,
        },
        EventOutcome::Censored { .. } => EventObservation::censored(year, start_day),
    }
}

/// Simulates `n` observations spread round-robin over `series`, with start
/// days drawn uniformly from `start_day +/- start_jitter`.
pub fn simulate_events(
    series: &[TemperatureSeries],
    template: &ModelTemplate,
    block: &ParameterBlock,
    n: usize,
    start_day: u32,
    start_jitter: u32,
    seed: u64,
) -> Result<Vec<EventObservation>> {
    if series.is_empty() {
        return Err(Error::Data("no temperature series to simulate from".into()));
    }
    if start_jitter >= start_day {
        return Err(Error::Config("start jitter must be smaller than the start day".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = &series[i % series.len()];
        let offset = rng.random_range(0..=2 * start_jitter);
        let start = start_day - start_jitter + offset;
        let outcome = simulate_outcome(s, template, block, start, &mut rng)?;
        let obs = outcome_to_observation(s.year, start, outcome);
        if obs.end_day.is_some_and(|e| e as usize > s.len_days()) {
            out.push(EventObservation::censored(s.year, start));
        } else {
            out.push(obs);
        }
    }
    Ok(out)
}
