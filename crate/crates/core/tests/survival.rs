mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threshold_survival::phenology::{seasonal_series, SeasonalConfig};
use threshold_survival::{
    accumulate_forcing, event_log_density, sample_event_time, survival_at, EventOutcome, ForcingFamily,
    ForcingParams, HazardPath, ModelSpec, WarpingSpec,
};

// The 0.1-day trapezoid carries an O(h^2 (f/sigma)^2) error, so the 1e-6 budget
// is checked on broad thresholds and sharp ones go through extrapolation.
#[test]
fn probability_is_conserved() {
    let smooth = SeasonalConfig { noise_sd: 0.0, ..SeasonalConfig::default() };
    let series = seasonal_series(2000, 50, &smooth, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for s in &series {
        let spec = random_spec(&mut rng, 40.0..150.0, 25.0..60.0);
        let t_start = rng.random_range(100.0..180.0);
        let path = accumulate_forcing(s, &spec, t_start).unwrap();
        let r = conservation_residual(&path, &spec, trapezoid_mass(&path, &spec, 10));
        assert!(r.abs() < 1e-6, "{spec:?}: residual {r}");
    }
}

#[test]
fn sharp_threshold_residual_is_quadrature_error() {
    let series = seasonal_series(2000, 20, &SeasonalConfig::default(), 21);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for s in &series {
        let spec = random_spec(&mut rng, 20.0..80.0, 1.0..5.0);
        let path = accumulate_forcing(s, &spec, 155.0).unwrap();
        let coarse = trapezoid_mass(&path, &spec, 10);
        let fine = trapezoid_mass(&path, &spec, 20);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        let r = conservation_residual(&path, &spec, extrapolated);
        assert!(r.abs() < 1e-8, "{spec:?}: residual {r}");
    }
}

#[test]
fn identity_warping_is_the_standard_model() {
    let series = seasonal_series(2000, 1, &SeasonalConfig::default(), 5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let mut spec = random_spec(&mut rng, 20.0..80.0, 1.0..15.0);
        spec.warping = WarpingSpec::Identity;
        let path = accumulate_forcing(&series[0], &spec, 150.0).unwrap();
        for i in 0..400 {
            let t = 150.0 + i as f64 * 0.5;
            let n = (t - 150.0).floor() as usize;
            let lam = spec.hazard_scale * (path.cum_psi[n] + (t - 150.0 - n as f64) * path.day_forcings[n]);
            let rate = spec.hazard_scale * path.day_forcings[n];
            let lp = event_log_density(&path, &spec, t).unwrap();
            if rate == 0.0 {
                assert!(lp.is_zero());
            } else {
                let expect = rate.ln() - lam;
                assert!((lp.value() - expect).abs() < 1e-12 * expect.abs().max(1.0));
            }
        }
    }
}

#[test]
fn event_density_ignores_hazard_scale_at_fixed_ratio() {
    let series = seasonal_series(2000, 1, &SeasonalConfig::default(), 9);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let psi0 = rng.random_range(10.0..60.0);
        let sigma = rng.random_range(0.5..8.0);
        let base = random_spec(&mut rng, 20.0..80.0, 1.0..15.0);
        let t = rng.random_range(150.0..300.0);
        let values: Vec<f64> = [0.5, 1.0, 2.0, 10.0]
            .iter()
            .map(|&gamma| {
                let spec = ModelSpec {
                    warping: WarpingSpec::SoftThreshold { lambda0: gamma * psi0, alpha: gamma * sigma },
                    hazard_scale: gamma,
                    ..base
                };
                let path = accumulate_forcing(&series[0], &spec, 150.0).unwrap();
                event_log_density(&path, &spec, t).unwrap().value()
            })
            .collect();
        for v in &values[1..] {
            if values[0].is_finite() {
                assert!((v - values[0]).abs() < 1e-10, "{values:?}");
            } else {
                assert_eq!(*v, values[0]);
            }
        }
    }
}

#[test]
fn sampler_matches_survival_function() {
    let series = seasonal_series(2000, 1, &SeasonalConfig::default(), 11);
    let spec = ModelSpec {
        family: ForcingFamily::SmoothBeta,
        forcing: ForcingParams::new(2.0, 18.0, 30.0, 1.0).unwrap(),
        warping: WarpingSpec::SoftThreshold { lambda0: 45.0, alpha: 3.0 },
        hazard_scale: 1.0,
        threshold_parameterization: true,
    };
    let path = accumulate_forcing(&series[0], &spec, 155.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 100_000;
    let mut times: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            match sample_event_time(&path, &spec, u).unwrap() {
                EventOutcome::Occurred { day } => day,
                EventOutcome::Censored { .. } => f64::INFINITY,
            }
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let cdf = |t: f64| {
        if t.is_finite() {
            1.0 - survival_at(&path, &spec, t).unwrap()
        } else {
            1.0
        }
    };
    let mut d: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let f = cdf(t);
        d = d.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
    }
    // one-sample KS critical value at the 1% level
    assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
}

#[test]
fn survival_is_non_increasing() {
    let series = seasonal_series(2000, 10, &SeasonalConfig::default(), 13);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in &series {
        let spec = random_spec(&mut rng, 20.0..80.0, 1.0..15.0);
        let path = accumulate_forcing(s, &spec, 120.5).unwrap();
        let mut last = f64::INFINITY;
        let mut t = path.first_day;
        while t <= path.year_end {
            let v = survival_at(&path, &spec, t).unwrap();
            assert!(v <= last && v >= 0.0 && v <= 1.0);
            last = v;
            t += 0.25;
        }
    }
}

#[test]
fn survival_at_start_reports_truncation() {
    let path = HazardPath::from_forcings(10.0, vec![1.0; 30]).unwrap();
    let spec = ModelSpec {
        family: ForcingFamily::WangEngel,
        forcing: ForcingParams::new(0.0, 15.0, 40.0, 1.0).unwrap(),
        warping: WarpingSpec::SoftThreshold { lambda0: 6.0, alpha: 2.0 },
        hazard_scale: 1.0,
        threshold_parameterization: false,
    };
    let s0 = survival_at(&path, &spec, 10.0).unwrap();
    let expect = (-(1.0f64 + (-3.0f64).exp()).ln()).exp();
    assert!((s0 - expect).abs() < 1e-15 && s0 < 1.0);
    assert!((threshold_survival::truncation_mass(&spec) - (1.0 - expect)).abs() < 1e-15);
}
