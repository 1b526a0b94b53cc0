#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use threshold_survival::phenology::{seasonal_series, simulate_events, SeasonalConfig};
use threshold_survival::{
    survival_at, warp_deriv, warp_value, DensityFamily, ForcingFamily, ForcingParams, HazardPath,
    InducedDensitySpec, LogDensity, ModelKind, ModelSpec, ModelTemplate, ObservationSet, ParameterBlock,
    PhenologyPosterior, WarpingSpec,
};

pub const FIRST_YEAR: i32 = 1987;

pub fn truth() -> ParameterBlock {
    ParameterBlock::from_temperatures(2.0, 18.0, 30.0, Some(45.0), Some(2.0), None)
}

pub fn template(kind: ModelKind) -> ModelTemplate {
    ModelTemplate::new(kind, ForcingFamily::SmoothBeta, 1.0)
}

/// Threshold-model events on smooth seasonal temperatures, four per year,
/// starting around day 155.
pub fn synthetic_data(n_years: usize, seed: u64) -> ObservationSet {
    let series = seasonal_series(FIRST_YEAR, n_years, &SeasonalConfig::default(), seed);
    let events = simulate_events(
        &series,
        &template(ModelKind::Threshold),
        &truth(),
        4 * n_years,
        155,
        2,
        seed + 1,
    )
    .unwrap();
    ObservationSet::new(events, series).unwrap()
}

/// Largest per-coordinate discrepancy between the autodiff gradient and
/// central differences, relative to the difference quotient and with an
/// absolute floor near zero.
pub fn gradient_error(posterior: &PhenologyPosterior, theta: &[f64], h: f64) -> f64 {
    gradient_error_with(posterior, theta, |i| central_difference(posterior, theta, i, h))
}

/// As [`gradient_error`], against the Richardson combination of central
/// differences at `h` and `h / 2`.
pub fn gradient_error_extrapolated(posterior: &PhenologyPosterior, theta: &[f64], h: f64) -> f64 {
    gradient_error_with(posterior, theta, |i| {
        let coarse = central_difference(posterior, theta, i, h);
        let fine = central_difference(posterior, theta, i, 0.5 * h);
        (4.0 * fine - coarse) / 3.0
    })
}

fn central_difference(posterior: &PhenologyPosterior, theta: &[f64], i: usize, h: f64) -> f64 {
    let mut up = theta.to_vec();
    let mut down = theta.to_vec();
    up[i] += h;
    down[i] -= h;
    (posterior.log_posterior_value(&up).unwrap() - posterior.log_posterior_value(&down).unwrap()) / (2.0 * h)
}

fn gradient_error_with(posterior: &PhenologyPosterior, theta: &[f64], fd: impl Fn(usize) -> f64) -> f64 {
    let (value, grad) = posterior.log_posterior(theta).unwrap();
    assert!(value.is_finite(), "log posterior is {value} at {theta:?}");
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let fd = fd(i);
        let diff = (grad[i] - fd).abs();
        assert!(diff.is_finite(), "gradient {} vs difference {fd}", grad[i]);
        let err = if diff < 1e-8 { 0.0 } else { diff / fd.abs() };
        worst = worst.max(err);
    }
    worst
}

/// Correlated Gaussian with mean `mu`, standard deviations `sd` and
/// correlation `rho`.
pub struct Gaussian2 {
    pub mu: [f64; 2],
    pub sd: [f64; 2],
    pub rho: f64,
}

impl LogDensity for Gaussian2 {
    fn dim(&self) -> usize {
        2
    }

    fn log_density_and_gradient(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let z0 = (q[0] - self.mu[0]) / self.sd[0];
        let z1 = (q[1] - self.mu[1]) / self.sd[1];
        let k = 1.0 / (1.0 - self.rho * self.rho);
        let value = -0.5 * k * (z0 * z0 - 2.0 * self.rho * z0 * z1 + z1 * z1);
        let g0 = -k * (z0 - self.rho * z1) / self.sd[0];
        let g1 = -k * (z1 - self.rho * z0) / self.sd[1];
        (value, vec![g0, g1])
    }
}

pub struct StdNormal;

impl LogDensity for StdNormal {
    fn dim(&self) -> usize {
        1
    }

    fn log_density_and_gradient(&self, q: &[f64]) -> (f64, Vec<f64>) {
        (-0.5 * q[0] * q[0], vec![-q[0]])
    }
}

/// `v ~ N(0, 3)`, `x_i | v ~ N(0, exp(v / 2))`.
pub struct Funnel {
    pub dim: usize,
}

impl LogDensity for Funnel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_and_gradient(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let v = q[0];
        let k = (self.dim - 1) as f64;
        let inv_var = (-v).exp();
        let ss: f64 = q[1..].iter().map(|x| x * x).sum();
        let value = -v * v / 18.0 - 0.5 * k * v - 0.5 * ss * inv_var;
        let mut grad = vec![-v / 9.0 - 0.5 * k + 0.5 * ss * inv_var];
        grad.extend(q[1..].iter().map(|x| -x * inv_var));
        (value, grad)
    }
}

/// Pooled mean of all chains and its Monte Carlo standard error.
pub fn pooled_mean_mcse(chains: &[Vec<f64>]) -> (f64, f64) {
    use threshold_survival::inference::diagnostics::ess;
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / ess(chains)).sqrt())
}

pub fn random_spec(rng: &mut ChaCha8Rng, psi0: std::ops::Range<f64>, sigma: std::ops::Range<f64>) -> ModelSpec {
    let t_min = rng.random_range(-2.0..6.0);
    let t_opt = t_min + rng.random_range(8.0..20.0);
    let t_max = t_opt + rng.random_range(4.0..15.0);
    let kind = rng.random_range(0..3);
    // the standard model exhausts its mass in a few days unless the per-day rate is small
    let gamma = if kind == 0 { rng.random_range(0.005..0.03) } else { rng.random_range(0.2..2.0) };
    let psi0 = rng.random_range(psi0);
    let sigma = rng.random_range(sigma);
    let warping = match kind {
        0 => WarpingSpec::Identity,
        1 => WarpingSpec::SoftThreshold { lambda0: gamma * psi0, alpha: gamma * sigma },
        _ => WarpingSpec::Induced(InducedDensitySpec {
            family: DensityFamily::Normal,
            location: gamma * psi0,
            scale: gamma * sigma,
            shape: None,
        }),
    };
    ModelSpec {
        family: if rng.random_bool(0.5) { ForcingFamily::SmoothBeta } else { ForcingFamily::WangEngel },
        forcing: ForcingParams::new(t_min, t_opt, t_max, 1.0).unwrap(),
        warping,
        hazard_scale: gamma,
        threshold_parameterization: false,
    }
}

/// Event density on day `n`'s piece, including its right end point.
pub fn density_on_day(path: &HazardPath, spec: &ModelSpec, n: usize, t: f64) -> f64 {
    let rate = spec.hazard_scale * path.day_forcings[n];
    if rate == 0.0 {
        return 0.0;
    }
    let lam = spec.hazard_scale * (path.cum_psi[n] + (t - path.first_day - n as f64) * path.day_forcings[n]);
    rate * warp_deriv(&spec.warping, lam).unwrap() * (-warp_value(&spec.warping, lam).unwrap()).exp()
}

pub fn trapezoid_mass(path: &HazardPath, spec: &ModelSpec, per_day: usize) -> f64 {
    let h = 1.0 / per_day as f64;
    let mut integral = 0.0;
    for n in 0..path.len_days() {
        let day = path.first_day + n as f64;
        let ys: Vec<f64> = (0..=per_day).map(|k| density_on_day(path, spec, n, day + k as f64 * h)).collect();
        integral += h * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[per_day]));
    }
    integral
}

pub fn conservation_residual(path: &HazardPath, spec: &ModelSpec, mass: f64) -> f64 {
    let terminal = survival_at(path, spec, path.year_end).unwrap();
    let initial = survival_at(path, spec, path.first_day).unwrap();
    mass + terminal - initial
}

