use super::hmc::LogDensity;
use super::model::{LikelihoodForm, ModelKind, ModelTemplate, ParameterBlock};
use super::prior::PriorConfig;
use super::transform::{to_constrained, to_unconstrained};
use crate::autodiff::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::forcing::ForcingCurve;
use crate::math::normal_log_density;
use crate::phenology::ObservationSet;
use crate::survival::{interval_log_prob, log_density_from_parts, LogProb};
use crate::warping::value_unchecked;

/// One observation, as offsets into its year's forcing window.
#[derive(Clone, Copy, Debug)]
struct ObsIndex {
    start: usize,
    /// Offset of the observed event day; `None` when censored.
    end: Option<usize>,
}

/// The temperature window a year's observations need, and those observations.
#[derive(Clone, Debug)]
struct YearBlock {
    temps: Vec<f64>,
    obs: Vec<ObsIndex>,
}

/// Log posterior of a phenology model over unconstrained coordinates.
#[derive(Clone, Debug)]
pub struct PhenologyPosterior {
    template: ModelTemplate,
    priors: PriorConfig,
    likelihood: LikelihoodForm,
    hazard_convention: Option<f64>,
    years: Vec<YearBlock>,
    n_obs: usize,
}

impl PhenologyPosterior {
    pub fn new(
        template: ModelTemplate,
        data: &ObservationSet,
        priors: PriorConfig,
        likelihood: LikelihoodForm,
    ) -> Result<Self> {
        priors.validate()?;
        if !(template.delta > 0.0 && template.delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be positive, got {}",
                template.delta
            )));
        }
        let mut years = Vec::new();
        for (&year, series) in &data.series_by_year {
            let obs: Vec<_> = data.observations.iter().filter(|o| o.year == year).collect();
            if obs.is_empty() {
                continue;
            }
            if template.kind == ModelKind::Conventional && obs.iter().any(|o| o.censored) {
                return Err(Error::Unsupported(
                    "the conventional model has no likelihood for censored observations".into(),
                ));
            }
            let first = obs.iter().map(|o| o.start_day).min().unwrap_or(1) as usize;
            // Only censored observations need forcing beyond the last event day.
            let last = if obs.iter().any(|o| o.censored) {
                series.len_days()
            } else {
                obs.iter().filter_map(|o| o.end_day).max().unwrap_or(1) as usize
            };
            years.push(YearBlock {
                temps: series.temps_c[first - 1..last].to_vec(),
                obs: obs
                    .iter()
                    .map(|o| ObsIndex {
                        start: o.start_day as usize - first,
                        end: o.end_day.map(|e| e as usize - first),
                    })
                    .collect(),
            });
        }
        Ok(Self {
            template,
            priors,
            likelihood,
            hazard_convention: None,
            years,
            n_obs: data.len(),
        })
    }

    /// Evaluates threshold-type models with hazard scale `c` and warping
    /// parameters `(c * psi0, c * sigma)` instead of directly on the
    /// accumulated-forcing scale. The value does not depend on `c`.
    pub fn with_hazard_convention(mut self, c: f64) -> Self {
        self.hazard_convention = Some(c);
        self
    }

    pub fn template(&self) -> &ModelTemplate {
        &self.template
    }

    pub fn len_observations(&self) -> usize {
        self.n_obs
    }

    /// Log posterior density at `theta`; non-finite when the point is
    /// numerically unusable.
    pub fn log_posterior_value(&self, theta: &[f64]) -> Result<f64> {
        self.evaluate(theta)
    }

    /// Log posterior and its gradient at `theta`.
    pub fn log_posterior(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self.template.kind.dim() {
            4 => self.with_gradient::<4>(theta),
            5 => self.with_gradient::<5>(theta),
            d => Err(Error::Config(format!("no gradient kernel for dimension {d}"))),
        }
    }

    /// Log prior on the constrained parameters plus the log Jacobian.
    pub fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        let (block, log_jac) = to_constrained(theta, self.template.kind)?;
        Ok(self.priors.log_density(&block, self.template.kind) + log_jac)
    }

    fn with_gradient<const N: usize>(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        if theta.len() != N {
            return Err(Error::Config(format!(
                "expected {N} unconstrained values, got {}",
                theta.len()
            )));
        }
        let vars: Vec<Dual<N>> = (0..N).map(|i| Dual::variable(theta[i], i)).collect();
        let out = self.evaluate(&vars)?;
        Ok((out.value(), out.partials.to_vec()))
    }

    fn evaluate<S: Scalar>(&self, theta: &[S]) -> Result<S> {
        let kind = self.template.kind;
        let (block, log_jac) = to_constrained(theta, kind)?;
        let prior = self.priors.log_density(&block, kind) + log_jac;
        if !block.all_finite() || !prior.is_finite() {
            return Ok(S::cst(f64::NEG_INFINITY));
        }
        Ok(prior + self.log_likelihood(&block)?)
    }

    /// Sum of per-observation log likelihoods at constrained parameters.
    pub fn log_likelihood<S: Scalar>(&self, block: &ParameterBlock<S>) -> Result<S> {
        if self.years.is_empty() {
            return Ok(S::cst(0.0));
        }
        let forcing = block.forcing(self.template.delta);
        if forcing.validate().is_err() {
            return Ok(S::cst(f64::NEG_INFINITY));
        }
        let curve = ForcingCurve::new_unchecked(self.template.forcing_family, &forcing);
        if self.template.kind == ModelKind::Conventional {
            return Ok(self.conventional_log_lik(block, &curve));
        }
        let spec = self.template.survival_spec(block, self.hazard_convention)?;
        let scale = spec.effective_scale();
        let mut total = S::cst(0.0);
        let mut forcings = Vec::new();
        let mut cum = Vec::new();
        for year in &self.years {
            daily_window(&curve, &year.temps, &mut forcings, &mut cum);
            for o in &year.obs {
                let lam = |k: usize| scale * (cum[k] - cum[o.start]);
                let term = match o.end {
                    None => LogProb::Value(-value_unchecked(&spec.warping, lam(cum.len() - 1))),
                    Some(n) => match self.likelihood {
                        LikelihoodForm::DayInterval => {
                            interval_log_prob(&spec.warping, lam(n), scale * forcings[n])
                        }
                        LikelihoodForm::Continuous => {
                            let mid = lam(n) + scale * forcings[n] * 0.5;
                            log_density_from_parts(&spec.warping, scale * forcings[n], mid)
                        }
                    },
                };
                match term {
                    LogProb::Value(v) => total += v,
                    LogProb::Zero => return Ok(S::cst(f64::NEG_INFINITY)),
                }
            }
        }
        Ok(total)
    }

    fn conventional_log_lik<S: Scalar>(&self, block: &ParameterBlock<S>, curve: &ForcingCurve<S>) -> S {
        let (Some(psi0), Some(sigma)) = (block.psi0, block.sigma) else {
            return S::cst(f64::NAN);
        };
        let mut total = S::cst(0.0);
        let mut forcings = Vec::new();
        let mut cum = Vec::new();
        for year in &self.years {
            daily_window(curve, &year.temps, &mut forcings, &mut cum);
            for o in &year.obs {
                if let Some(n) = o.end {
                    // Forcing accumulated through the end of the event day.
                    let psi = cum[n + 1] - cum[o.start];
                    total += normal_log_density(psi, psi0, sigma);
                }
            }
        }
        total
    }
}

/// Daily forcings over `temps` and their prefix sums (one longer, from zero).
fn daily_window<S: Scalar>(curve: &ForcingCurve<S>, temps: &[f64], forcings: &mut Vec<S>, cum: &mut Vec<S>) {
    forcings.clear();
    cum.clear();
    let mut acc = S::cst(0.0);
    cum.push(acc);
    for &t in temps {
        let f = curve.eval(t);
        forcings.push(f);
        acc += f;
        cum.push(acc);
    }
}

impl LogDensity for PhenologyPosterior {
    fn dim(&self) -> usize {
        self.template.kind.dim()
    }

    fn log_density_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        match self.log_posterior(theta) {
            Ok(v) => v,
            Err(_) => (f64::NAN, vec![f64::NAN; theta.len()]),
        }
    }

    /// Chains start around the prior medians: a box around the origin
    /// would put the cardinal temperatures near zero, where no observed
    /// day receives forcing.
    fn init_center(&self) -> Vec<f64> {
        let kind = self.template.kind;
        to_unconstrained(&self.priors.median_block(kind), kind).unwrap_or_else(|_| vec![0.0; kind.dim()])
    }
}
