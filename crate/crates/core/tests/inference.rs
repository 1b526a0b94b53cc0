mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threshold_survival::inference::diagnostics::{ess, rank_normalized_rhat};
use threshold_survival::inference::transform::to_unconstrained;
use threshold_survival::inference::{leapfrog, PhasePoint};
use threshold_survival::*;

fn posterior(kind: ModelKind, data: &ObservationSet) -> PhenologyPosterior {
    PhenologyPosterior::new(template(kind), data, PriorConfig::default(), LikelihoodForm::DayInterval).unwrap()
}

fn random_theta(rng: &mut ChaCha8Rng, kind: ModelKind) -> Vec<f64> {
    let mut block = truth();
    if kind == ModelKind::Standard {
        block = ParameterBlock { psi0: None, sigma: None, gamma: Some(0.02), ..block };
    }
    let centre = to_unconstrained(&block, kind).unwrap();
    centre.iter().map(|c| c + rng.random_range(-0.5..0.5)).collect()
}

/// Random point with a finite log posterior; a season that rises above
/// `t_max` on an event day has zero likelihood.
fn finite_theta(rng: &mut ChaCha8Rng, post: &PhenologyPosterior) -> Vec<f64> {
    loop {
        let theta = random_theta(rng, post.template().kind);
        if post.log_posterior_value(&theta).unwrap().is_finite() {
            return theta;
        }
    }
}

#[test]
fn empty_data_leaves_prior_and_jacobian() {
    let data = ObservationSet::new(Vec::new(), Vec::new()).unwrap();
    let centre = |kind| to_unconstrained(&PriorConfig::default().median_block(kind), kind).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [ModelKind::Threshold, ModelKind::Standard, ModelKind::Conventional] {
        let post = posterior(kind, &data);
        for _ in 0..10 {
            let theta: Vec<f64> = centre(kind).iter().map(|c| c + rng.random_range(-1.0..1.0)).collect();
            let (block, log_jac) = to_constrained(&theta, kind).unwrap();
            let expect = PriorConfig::default().log_density(&block, kind) + log_jac;
            assert_eq!(post.log_posterior_value(&theta).unwrap(), expect);
            assert_eq!(post.log_prior(&theta).unwrap(), expect);
        }
    }
}

#[test]
fn duplicated_data_doubles_likelihood() {
    let data = synthetic_data(4, 3);
    let mut twice = data.observations.clone();
    twice.extend(data.observations.iter().cloned());
    let doubled = ObservationSet::new(twice, data.series_by_year.values().cloned()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kind in [ModelKind::Threshold, ModelKind::Standard, ModelKind::InducedNormal] {
        let (one, two) = (posterior(kind, &data), posterior(kind, &doubled));
        for _ in 0..5 {
            let theta = finite_theta(&mut rng, &one);
            let prior = one.log_prior(&theta).unwrap();
            let a = one.log_posterior_value(&theta).unwrap() - prior;
            let b = two.log_posterior_value(&theta).unwrap() - prior;
            assert!(a.is_finite());
            assert!((b - 2.0 * a).abs() < 1e-9 * a.abs().max(1.0), "{a} {b}");
        }
    }
}

#[test]
fn hazard_convention_does_not_change_posterior() {
    let data = synthetic_data(4, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in [ModelKind::Threshold, ModelKind::InducedNormal] {
        let one = posterior(kind, &data).with_hazard_convention(1.0);
        let two = posterior(kind, &data).with_hazard_convention(2.0);
        let native = posterior(kind, &data);
        for _ in 0..10 {
            let theta = finite_theta(&mut rng, &native);
            let a = one.log_posterior_value(&theta).unwrap();
            let b = two.log_posterior_value(&theta).unwrap();
            let c = native.log_posterior_value(&theta).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} {b}");
            assert!((a - c).abs() < 1e-9 * a.abs().max(1.0), "{a} {c}");
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let data = synthetic_data(6, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in [ModelKind::Threshold, ModelKind::Standard, ModelKind::InducedNormal, ModelKind::Conventional] {
        let post = posterior(kind, &data);
        for _ in 0..25 {
            let theta = finite_theta(&mut rng, &post);
            // elsewhere the plain 1e-5 quotient's own truncation error can
            // exceed 1e-6 along strongly curved directions
            let err = if kind == ModelKind::Threshold {
                gradient_error(&post, &theta, 1e-5)
            } else {
                gradient_error_extrapolated(&post, &theta, 1e-4)
            };
            assert!(err < 1e-6, "{kind:?} at {theta:?}: {err}");
        }
    }
}

#[test]
fn continuous_likelihood_gradient() {
    let data = synthetic_data(3, 10);
    let post =
        PhenologyPosterior::new(template(ModelKind::Threshold), &data, PriorConfig::default(), LikelihoodForm::Continuous)
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let theta = finite_theta(&mut rng, &post);
        assert!(gradient_error(&post, &theta, 1e-5) < 1e-6);
    }
}

#[test]
fn standard_normal_moments() {
    let config = HmcConfig { chains: 4, warmup_iters: 1000, sample_iters: 1000, seed: 11, ..HmcConfig::default() };
    let draws = run_hmc(&StdNormal, &config).unwrap();
    let x: Vec<f64> = draws.coordinate(0).into_iter().flatten().collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 0.05, "mean {mean}");
    assert!((var - 1.0).abs() < 0.1, "var {var}");
    assert_eq!(draws.total_divergences(), 0);
}

#[test]
fn gaussian_moments_within_mcse() {
    let target = Gaussian2 { mu: [1.0, -2.0], sd: [1.0, 3.0], rho: 0.6 };
    let config = HmcConfig { seed: 12, ..HmcConfig::default() };
    let draws = run_hmc(&target, &config).unwrap();
    let x = draws.coordinate(0);
    let y = draws.coordinate(1);
    for (i, chains) in [&x, &y].into_iter().enumerate() {
        let (mean, mcse) = pooled_mean_mcse(chains);
        assert!((mean - target.mu[i]).abs() < 3.0 * mcse, "mean {i}: {mean} +- {mcse}");
        let sq: Vec<Vec<f64>> =
            chains.iter().map(|c| c.iter().map(|v| (v - target.mu[i]).powi(2)).collect()).collect();
        let (var, mcse) = pooled_mean_mcse(&sq);
        assert!((var - target.sd[i].powi(2)).abs() < 3.0 * mcse, "var {i}: {var} +- {mcse}");
    }
    let cross: Vec<Vec<f64>> = x
        .iter()
        .zip(&y)
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - target.mu[0]) * (v - target.mu[1])).collect())
        .collect();
    let (cov, mcse) = pooled_mean_mcse(&cross);
    let truth = target.rho * target.sd[0] * target.sd[1];
    assert!((cov - truth).abs() < 3.0 * mcse, "cov {cov} +- {mcse}");
    assert!(rank_normalized_rhat(&x) < 1.01);
}

#[test]
fn funnel_with_large_step_diverges() {
    let config = HmcConfig { chains: 2, warmup_iters: 100, sample_iters: 200, step_size: Some(3.0), seed: 3, ..HmcConfig::default() };
    let draws = run_hmc(&Funnel { dim: 10 }, &config).unwrap();
    assert!(draws.total_divergences() > 0);
}

#[test]
fn same_seed_is_bit_identical() {
    let target = Gaussian2 { mu: [0.0, 0.0], sd: [1.0, 2.0], rho: 0.3 };
    let config = HmcConfig { warmup_iters: 200, sample_iters: 200, seed: 42, ..HmcConfig::default() };
    let a = run_hmc(&target, &config).unwrap();
    let b = run_hmc(&target, &config).unwrap();
    assert_eq!(a.unconstrained, b.unconstrained);
    assert_eq!(a.step_sizes, b.step_sizes);
    assert_ne!(a.unconstrained[0], a.unconstrained[1]);
    let c = run_hmc(&target, &HmcConfig { seed: 43, ..config }).unwrap();
    assert_ne!(a.unconstrained, c.unconstrained);
}

#[test]
fn tiny_steps_conserve_energy() {
    let target = Gaussian2 { mu: [1.0, -2.0], sd: [1.0, 3.0], rho: 0.6 };
    let inv_metric = [1.0, 9.0];
    let mut point = PhasePoint::new(&target, vec![2.0, 1.0], vec![0.7, -0.4]);
    let h0 = point.hamiltonian(&inv_metric);
    for _ in 0..10_000 {
        leapfrog(&target, &mut point, 1e-4, &inv_metric);
    }
    assert!((point.hamiltonian(&inv_metric) - h0).abs() < 1e-6);
}

#[test]
fn cached_gradients_match_fresh_evaluation() {
    let data = synthetic_data(2, 13);
    let post = posterior(ModelKind::Threshold, &data);
    let config = HmcConfig { chains: 1, warmup_iters: 60, sample_iters: 40, seed: 5, ..HmcConfig::default() };
    let draws = run_hmc(&post, &config).unwrap();
    for (q, (lp, g)) in draws.unconstrained[0].iter().zip(draws.log_density[0].iter().zip(&draws.gradients[0])) {
        let (fresh, grad) = post.log_posterior(q).unwrap();
        assert_eq!(fresh, *lp);
        assert_eq!(&grad, g);
    }
}

#[test]
fn diagnostics_detect_stuck_and_shifted_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut normal = || -> Vec<f64> { (0..2000).map(|_| rng.sample(rand_distr::StandardNormal)).collect() };
    let iid = vec![normal(), normal()];
    let r = rank_normalized_rhat(&iid);
    assert!((0.99..=1.02).contains(&r), "{r}");
    let mut shifted = iid.clone();
    shifted[1].iter_mut().for_each(|v| *v += 10.0);
    assert!(rank_normalized_rhat(&shifted) > 1.1);
    let d = compute_diagnostics(
        &[("flat".to_string(), vec![vec![3.0; 100]; 2]), ("x".to_string(), iid.clone())],
        &[0, 0],
    );
    assert!(d.parameters[0].degenerate && d.parameters[0].rhat.is_none());
    assert!(!d.parameters[1].degenerate);
    assert!(d.flagged.contains(&"flat".to_string()));
    assert!(ess(&iid) > 2000.0);
}
