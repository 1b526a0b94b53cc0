//! Hamiltonian Monte Carlo with a diagonal metric, jittered fixed-length
//! trajectories, dual-averaging step size adaptation and windowed metric
//! estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A differentiable log density over unconstrained coordinates.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    /// Value and gradient; a non-finite value marks an unusable point.
    fn log_density_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>);
    /// Centre of the initialization box.
    fn init_center(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmcConfig {
    pub chains: usize,
    pub warmup_iters: usize,
    pub sample_iters: usize,
    pub target_accept: f64,
    pub max_leapfrog_steps: usize,
    pub divergence_energy_threshold: f64,
    pub seed: u64,
    /// Mean trajectory length in metric-scaled units; the step count is
    /// jittered uniformly between half and one and a half times this.
    pub integration_time: f64,
    /// Fixes the step size and disables all adaptation; the metric stays
    /// the identity.
    pub step_size: Option<f64>,
    /// Half-width of the uniform initialization box.
    pub init_radius: f64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup_iters: 1000,
            sample_iters: 1000,
            target_accept: 0.8,
            max_leapfrog_steps: 1024,
            divergence_energy_threshold: 1000.0,
            seed: 1,
            integration_time: 2.0,
            step_size: None,
            init_radius: 1.0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.into())) };
        check(self.chains >= 1, "chains must be at least 1")?;
        check(self.sample_iters >= 1, "sample_iters must be at least 1")?;
        check(
            self.target_accept > 0.0 && self.target_accept < 1.0,
            "target_accept must lie in (0, 1)",
        )?;
        check(self.max_leapfrog_steps >= 1, "max_leapfrog_steps must be at least 1")?;
        check(
            self.divergence_energy_threshold > 0.0,
            "divergence_energy_threshold must be positive",
        )?;
        check(
            self.integration_time > 0.0 && self.integration_time.is_finite(),
            "integration_time must be positive",
        )?;
        check(
            self.step_size.map_or(true, |e| e > 0.0 && e.is_finite()),
            "step_size must be positive",
        )?;
        check(
            self.init_radius >= 0.0 && self.init_radius.is_finite(),
            "init_radius must be non-negative",
        )
    }
}

/// Position, momentum and cached target evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub log_density: f64,
    pub grad: Vec<f64>,
}

impl PhasePoint {
    pub fn new(target: &impl LogDensity, q: Vec<f64>, p: Vec<f64>) -> Self {
        let (log_density, grad) = target.log_density_and_gradient(&q);
        Self {
            q,
            p,
            log_density,
            grad,
        }
    }

    pub fn kinetic_energy(&self, inv_metric: &[f64]) -> f64 {
        0.5 * self.p.iter().zip(inv_metric).map(|(p, m)| p * p * m).sum::<f64>()
    }

    pub fn hamiltonian(&self, inv_metric: &[f64]) -> f64 {
        self.kinetic_energy(inv_metric) - self.log_density
    }

    fn is_finite(&self) -> bool {
        self.log_density.is_finite() && self.grad.iter().all(|g| g.is_finite())
    }
}

/// One leapfrog step of size `eps`.
pub fn leapfrog(target: &impl LogDensity, point: &mut PhasePoint, eps: f64, inv_metric: &[f64]) {
    for (p, g) in point.p.iter_mut().zip(&point.grad) {
        *p += 0.5 * eps * g;
    }
    for ((q, p), m) in point.q.iter_mut().zip(&point.p).zip(inv_metric) {
        *q += eps * m * p;
    }
    let (lp, grad) = target.log_density_and_gradient(&point.q);
    point.log_density = lp;
    point.grad = grad;
    for (p, g) in point.p.iter_mut().zip(&point.grad) {
        *p += 0.5 * eps * g;
    }
}

/// Draws from all chains, in chain order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    /// `[chain][iteration][coordinate]`, sampling phase only.
    pub unconstrained: Vec<Vec<Vec<f64>>>,
    pub log_density: Vec<Vec<f64>>,
    /// Cached gradient at each retained draw.
    pub gradients: Vec<Vec<Vec<f64>>>,
    pub divergent: Vec<Vec<bool>>,
    /// Sampling-phase divergences per chain.
    pub divergences: Vec<usize>,
    pub warmup_divergences: Vec<usize>,
    pub step_sizes: Vec<f64>,
    pub inv_metrics: Vec<Vec<f64>>,
    pub mean_accept: Vec<f64>,
    pub leapfrog_steps: Vec<usize>,
}

impl ChainDraws {
    pub fn n_chains(&self) -> usize {
        self.unconstrained.len()
    }

    pub fn n_draws(&self) -> usize {
        self.unconstrained.first().map_or(0, |c| c.len())
    }

    pub fn total_divergences(&self) -> usize {
        self.divergences.iter().sum()
    }

    /// `[chain][iteration]` sequence of one coordinate.
    pub fn coordinate(&self, i: usize) -> Vec<Vec<f64>> {
        self.unconstrained
            .iter()
            .map(|c| c.iter().map(|q| q[i]).collect())
            .collect()
    }
}

struct ChainOutput {
    draws: Vec<Vec<f64>>,
    log_density: Vec<f64>,
    gradients: Vec<Vec<f64>>,
    divergent: Vec<bool>,
    warmup_divergences: usize,
    step_size: f64,
    inv_metric: Vec<f64>,
    mean_accept: f64,
    leapfrog_steps: usize,
}

/// Runs all chains in parallel. Output depends only on the configuration
/// and target, not on thread scheduling.
pub fn run_hmc(target: &impl LogDensity, config: &HmcConfig) -> Result<ChainDraws> {
    config.validate()?;
    let outputs: Vec<ChainOutput> = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(target, config, c))
        .collect::<Result<_>>()?;
    let mut out = ChainDraws {
        unconstrained: Vec::new(),
        log_density: Vec::new(),
        gradients: Vec::new(),
        divergent: Vec::new(),
        divergences: Vec::new(),
        warmup_divergences: Vec::new(),
        step_sizes: Vec::new(),
        inv_metrics: Vec::new(),
        mean_accept: Vec::new(),
        leapfrog_steps: Vec::new(),
    };
    for o in outputs {
        out.divergences.push(o.divergent.iter().filter(|&&d| d).count());
        out.unconstrained.push(o.draws);
        out.log_density.push(o.log_density);
        out.gradients.push(o.gradients);
        out.divergent.push(o.divergent);
        out.warmup_divergences.push(o.warmup_divergences);
        out.step_sizes.push(o.step_size);
        out.inv_metrics.push(o.inv_metric);
        out.mean_accept.push(o.mean_accept);
        out.leapfrog_steps.push(o.leapfrog_steps);
    }
    Ok(out)
}

const INIT_ATTEMPTS: usize = 8;

fn initial_point(target: &impl LogDensity, config: &HmcConfig, rng: &mut ChaCha8Rng) -> Result<PhasePoint> {
    let dim = target.dim();
    let center = target.init_center();
    for _ in 0..INIT_ATTEMPTS {
        let q: Vec<f64> = center
            .iter()
            .map(|c| {
                if config.init_radius > 0.0 {
                    c + rng.random_range(-config.init_radius..=config.init_radius)
                } else {
                    *c
                }
            })
            .collect();
        let point = PhasePoint::new(target, q, vec![0.0; dim]);
        if point.is_finite() {
            return Ok(point);
        }
    }
    Err(Error::Initialization(format!(
        "no finite log density after {INIT_ATTEMPTS} attempts"
    )))
}

/// Nesterov dual averaging of the log step size.
#[derive(Clone, Debug)]
struct DualAveraging {
    mu: f64,
    target: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
    count: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64, target: f64) -> Self {
        Self {
            mu: (10.0 * eps).ln(),
            target,
            h_bar: 0.0,
            log_eps: eps.ln(),
            log_eps_bar: 0.0,
            count: 0.0,
        }
    }

    fn update(&mut self, accept: f64) -> f64 {
        self.count += 1.0;
        let w = 1.0 / (self.count + Self::T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - accept);
        self.log_eps = self.mu - self.count.sqrt() / Self::GAMMA * self.h_bar;
        let x = self.count.powf(-Self::KAPPA);
        self.log_eps_bar = x * self.log_eps + (1.0 - x) * self.log_eps_bar;
        self.log_eps.exp()
    }

    fn final_step(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Warmup schedule: a fast initial window, doubling slow windows that
/// estimate the metric, and a fast terminal window.
#[derive(Clone, Debug)]
struct Windows {
    slow_start: usize,
    slow_end: usize,
    ends: Vec<usize>,
}

impl Windows {
    fn new(warmup: usize) -> Self {
        let (init, term, base) = if warmup < 150 {
            let init = (0.15 * warmup as f64) as usize;
            let term = (0.1 * warmup as f64) as usize;
            (init, term, warmup.saturating_sub(init + term))
        } else {
            (75, 50, 25)
        };
        let slow_start = init;
        let slow_end = warmup.saturating_sub(term);
        let mut ends = Vec::new();
        let mut size = base.max(1);
        let mut start = slow_start;
        while start < slow_end {
            let mut end = start + size;
            // a window that would leave too little for its successor absorbs it
            if end + 2 * size > slow_end {
                end = slow_end;
            }
            ends.push(end);
            start = end;
            size *= 2;
        }
        Self {
            slow_start,
            slow_end,
            ends,
        }
    }

    fn in_slow(&self, it: usize) -> bool {
        it >= self.slow_start && it < self.slow_end
    }

    fn is_window_end(&self, it: usize) -> bool {
        self.ends.contains(&(it + 1))
    }
}

#[derive(Clone, Debug)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Variance shrunk toward a small constant, as an inverse metric.
    fn regularized(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| {
                let var = if self.n > 1 { s / (n - 1.0) } else { 1.0 };
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

fn sample_momentum(rng: &mut ChaCha8Rng, inv_metric: &[f64]) -> Vec<f64> {
    inv_metric
        .iter()
        .map(|m| {
            let z: f64 = rng.sample(StandardNormal);
            z / m.sqrt()
        })
        .collect()
}

/// Doubles or halves the step size until a single step's acceptance
/// probability crosses one half.
fn find_reasonable_step(
    target: &impl LogDensity,
    start: &PhasePoint,
    eps0: f64,
    inv_metric: &[f64],
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut eps = eps0;
    let mut point = start.clone();
    point.p = sample_momentum(rng, inv_metric);
    let h0 = point.hamiltonian(inv_metric);
    let log_accept = |eps: f64| {
        let mut trial = point.clone();
        leapfrog(target, &mut trial, eps, inv_metric);
        let h = trial.hamiltonian(inv_metric);
        if h.is_finite() {
            h0 - h
        } else {
            f64::NEG_INFINITY
        }
    };
    let up = log_accept(eps) > -std::f64::consts::LN_2;
    for _ in 0..100 {
        let la = log_accept(eps);
        if up && !(la > -std::f64::consts::LN_2) {
            return eps / 2.0;
        }
        if !up && la > -std::f64::consts::LN_2 {
            return eps;
        }
        eps = if up { eps * 2.0 } else { eps / 2.0 };
        if !(1e-10..=1e7).contains(&eps) {
            break;
        }
    }
    eps.clamp(1e-10, 1e7)
}

struct Transition {
    accept: f64,
    divergent: bool,
    steps: usize,
}

fn transition(
    target: &impl LogDensity,
    current: &mut PhasePoint,
    eps: f64,
    inv_metric: &[f64],
    config: &HmcConfig,
    rng: &mut ChaCha8Rng,
) -> Transition {
    let jitter: f64 = rng.random_range(0.5..1.5);
    let steps = ((jitter * config.integration_time / eps).round() as usize)
        .clamp(1, config.max_leapfrog_steps);
    current.p = sample_momentum(rng, inv_metric);
    let h0 = current.hamiltonian(inv_metric);
    let mut proposal = current.clone();
    for _ in 0..steps {
        leapfrog(target, &mut proposal, eps, inv_metric);
        let err = proposal.hamiltonian(inv_metric) - h0;
        if !proposal.is_finite() || !(err <= config.divergence_energy_threshold) {
            return Transition {
                accept: 0.0,
                divergent: true,
                steps,
            };
        }
    }
    let log_ratio = h0 - proposal.hamiltonian(inv_metric);
    let accept = if log_ratio >= 0.0 { 1.0 } else { log_ratio.exp() };
    let u: f64 = rng.random();
    if u < accept {
        *current = proposal;
    }
    Transition {
        accept,
        divergent: false,
        steps,
    }
}

fn run_chain(target: &impl LogDensity, config: &HmcConfig, chain: usize) -> Result<ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain as u64);
    let dim = target.dim();
    let mut current = initial_point(target, config, &mut rng)?;
    let mut inv_metric = vec![1.0; dim];
    let adapt_step = config.step_size.is_none();
    let mut eps = match config.step_size {
        Some(e) => e,
        None => find_reasonable_step(target, &current, 1.0, &inv_metric, &mut rng),
    };
    let mut averager = DualAveraging::new(eps, config.target_accept);
    let windows = Windows::new(config.warmup_iters);
    let mut welford = Welford::new(dim);
    let mut warmup_divergences = 0;

    for it in 0..config.warmup_iters {
        let t = transition(target, &mut current, eps, &inv_metric, config, &mut rng);
        warmup_divergences += t.divergent as usize;
        if adapt_step {
            eps = averager.update(t.accept);
        }
        if adapt_step && windows.in_slow(it) {
            welford.add(&current.q);
            if windows.is_window_end(it) {
                inv_metric = welford.regularized();
                welford = Welford::new(dim);
                eps = find_reasonable_step(target, &current, eps, &inv_metric, &mut rng);
                averager = DualAveraging::new(eps, config.target_accept);
            }
        }
    }
    if adapt_step && config.warmup_iters > 0 {
        eps = averager.final_step();
    }

    let n = config.sample_iters;
    let mut out = ChainOutput {
        draws: Vec::with_capacity(n),
        log_density: Vec::with_capacity(n),
        gradients: Vec::with_capacity(n),
        divergent: Vec::with_capacity(n),
        warmup_divergences,
        step_size: eps,
        inv_metric: inv_metric.clone(),
        mean_accept: 0.0,
        leapfrog_steps: 0,
    };
    let mut accept_sum = 0.0;
    for _ in 0..n {
        let t = transition(target, &mut current, eps, &inv_metric, config, &mut rng);
        accept_sum += t.accept;
        out.leapfrog_steps += t.steps;
        out.divergent.push(t.divergent);
        out.draws.push(current.q.clone());
        out.log_density.push(current.log_density);
        out.gradients.push(current.grad.clone());
    }
    out.mean_accept = accept_sum / n as f64;
    Ok(out)
}
