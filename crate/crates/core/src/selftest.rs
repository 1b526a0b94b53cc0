//! Quick numerical self-checks for installed builds: gradient fidelity,
//! probability conservation and hazard-scale invariance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::forcing::{ForcingFamily, ForcingParams};
use crate::inference::{
    to_unconstrained, LikelihoodForm, ModelKind, ModelTemplate, ParameterBlock, PhenologyPosterior, PriorConfig,
};
use crate::phenology::{seasonal_series, simulate_events, ObservationSet, SeasonalConfig};
use crate::survival::{accumulate_forcing, event_log_density, survival_at, HazardPath, ModelSpec};
use crate::warping::{warp_deriv, warp_value, WarpingSpec};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    /// Largest observed error.
    pub worst: f64,
    pub tolerance: f64,
}

pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![gradient_suite(seed)?, conservation_suite(seed)?, invariance_suite(seed)?])
}

fn report(name: &'static str, worst: f64, tolerance: f64) -> SuiteReport {
    SuiteReport {
        name,
        passed: worst < tolerance,
        worst,
        tolerance,
    }
}

/// Autodiff against Richardson-extrapolated central differences on the
/// threshold-model log posterior at 25 points with finite density.
pub fn gradient_suite(seed: u64) -> Result<SuiteReport> {
    let series = seasonal_series(1990, 6, &SeasonalConfig::default(), seed);
    let template = ModelTemplate::new(ModelKind::Threshold, ForcingFamily::SmoothBeta, 1.0);
    let truth = ParameterBlock::from_temperatures(2.0, 18.0, 30.0, Some(45.0), Some(2.0), None);
    let events = simulate_events(&series, &template, &truth, 24, 155, 2, seed + 1)?;
    let data = ObservationSet::new(events, series)?;
    let post = PhenologyPosterior::new(template, &data, PriorConfig::default(), LikelihoodForm::DayInterval)?;
    let centre = to_unconstrained(&truth, ModelKind::Threshold)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let central = |theta: &[f64], i: usize, h: f64| -> Result<f64> {
        let (mut up, mut down) = (theta.to_vec(), theta.to_vec());
        up[i] += h;
        down[i] -= h;
        Ok((post.log_posterior_value(&up)? - post.log_posterior_value(&down)?) / (2.0 * h))
    };
    let mut worst: f64 = 0.0;
    let mut points = 0;
    while points < 25 {
        let theta: Vec<f64> = centre.iter().map(|c| c + rng.random_range(-0.5..0.5)).collect();
        let (value, grad) = post.log_posterior(&theta)?;
        if !value.is_finite() {
            continue;
        }
        for i in 0..theta.len() {
            let fd = (4.0 * central(&theta, i, 5e-5)? - central(&theta, i, 1e-4)?) / 3.0;
            let diff = (grad[i] - fd).abs();
            let err = if diff < 1e-8 { 0.0 } else { diff / fd.abs() };
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
        points += 1;
    }
    Ok(report("gradient", worst, 1e-6))
}

fn density_on_day(path: &HazardPath, spec: &ModelSpec, n: usize, t: f64) -> Result<f64> {
    let rate = spec.hazard_scale * path.day_forcings[n];
    if rate == 0.0 {
        return Ok(0.0);
    }
    let lam = spec.hazard_scale * (path.cum_psi[n] + (t - path.first_day - n as f64) * path.day_forcings[n]);
    Ok(rate * warp_deriv(&spec.warping, lam)? * (-warp_value(&spec.warping, lam)?).exp())
}

/// Trapezoid integral of the event density at 0.1-day steps plus terminal
/// survival against initial survival, over 50 broad-threshold specs.
pub fn conservation_suite(seed: u64) -> Result<SuiteReport> {
    let smooth = SeasonalConfig {
        noise_sd: 0.0,
        ..SeasonalConfig::default()
    };
    let series = seasonal_series(2000, 50, &smooth, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for s in &series {
        let t_min = rng.random_range(-2.0..6.0);
        let t_opt = t_min + rng.random_range(8.0..20.0);
        let t_max = t_opt + rng.random_range(4.0..15.0);
        let gamma = rng.random_range(0.2..2.0);
        let spec = ModelSpec {
            family: ForcingFamily::SmoothBeta,
            forcing: ForcingParams::new(t_min, t_opt, t_max, 1.0)?,
            warping: WarpingSpec::SoftThreshold {
                lambda0: gamma * rng.random_range(40.0..150.0),
                alpha: gamma * rng.random_range(25.0..60.0),
            },
            hazard_scale: gamma,
            threshold_parameterization: false,
        };
        let path = accumulate_forcing(s, &spec, rng.random_range(100.0..180.0))?;
        let mut mass = 0.0;
        for n in 0..path.len_days() {
            let day = path.first_day + n as f64;
            let mut sum = 0.0;
            for k in 0..=10 {
                let w = if k == 0 || k == 10 { 0.5 } else { 1.0 };
                sum += w * density_on_day(&path, &spec, n, day + k as f64 * 0.1)?;
            }
            mass += 0.1 * sum;
        }
        let residual = mass + survival_at(&path, &spec, path.year_end)? - survival_at(&path, &spec, path.first_day)?;
        worst = worst.max(residual.abs());
    }
    Ok(report("conservation", worst, 1e-6))
}

/// Event log density under hazard scales 0.5, 1, 2 and 10 at a fixed
/// threshold-to-spread ratio, at 100 random points.
pub fn invariance_suite(seed: u64) -> Result<SuiteReport> {
    let series = seasonal_series(2000, 1, &SeasonalConfig::default(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let psi0 = rng.random_range(10.0..60.0);
        let sigma = rng.random_range(0.5..8.0);
        let t_min = rng.random_range(-2.0..6.0);
        let t_opt = t_min + rng.random_range(8.0..20.0);
        let forcing = ForcingParams::new(t_min, t_opt, t_opt + rng.random_range(4.0..15.0), 1.0)?;
        let t = rng.random_range(150.0..300.0);
        let mut values = Vec::with_capacity(4);
        for gamma in [0.5, 1.0, 2.0, 10.0] {
            let spec = ModelSpec {
                family: ForcingFamily::WangEngel,
                forcing,
                warping: WarpingSpec::SoftThreshold {
                    lambda0: gamma * psi0,
                    alpha: gamma * sigma,
                },
                hazard_scale: gamma,
                threshold_parameterization: false,
            };
            let path = accumulate_forcing(&series[0], &spec, 150.0)?;
            values.push(event_log_density(&path, &spec, t)?.value());
        }
        for v in &values[1..] {
            let gap = if v.is_finite() || values[0].is_finite() {
                (v - values[0]).abs()
            } else {
                0.0
            };
            worst = worst.max(if gap.is_nan() { f64::INFINITY } else { gap });
        }
    }
    Ok(report("invariance", worst, 1e-10))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass() {
        for r in run_all(3).unwrap() {
            assert!(r.passed, "{r:?}");
        }
    }
}
