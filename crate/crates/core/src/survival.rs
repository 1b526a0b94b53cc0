//! Cumulative hazard paths and standard/warped survival quantities.
//!
//! Daily forcings are treated as piecewise constant, so the cumulative
//! hazard is piecewise linear in time and day `n` covers `[n, n + 1)`.

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::forcing::{forcing_unchecked, ForcingCurve, ForcingFamily, ForcingParams};
use crate::math::{log1m_exp, LN_2};
use crate::phenology::TemperatureSeries;
use crate::warping::{
    gap_unchecked, log_deriv_unchecked, log_occurred_unchecked, occurred_gap_unchecked, value_unchecked,
    warp_inverse, WarpingSpec,
};

/// One survival model: forcing curve, warping and hazard scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<S = f64> {
    pub family: ForcingFamily,
    pub forcing: ForcingParams<S>,
    pub warping: WarpingSpec<S>,
    /// Converts accumulated forcing into cumulative hazard.
    pub hazard_scale: S,
    /// When set, warping parameters are read directly on the accumulated
    /// forcing scale (threshold `psi0`, scale `sigma = alpha / gamma`) and
    /// `hazard_scale` drops out.
    pub threshold_parameterization: bool,
}

impl<S: Scalar> ModelSpec<S> {
    pub fn validate(&self) -> Result<()> {
        self.forcing.validate()?;
        self.warping.validate()?;
        let g = self.hazard_scale.value();
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "hazard scale must be positive, got {g}"
            )));
        }
        Ok(())
    }

    pub fn effective_scale(&self) -> S {
        if self.threshold_parameterization {
            S::cst(1.0)
        } else {
            self.hazard_scale
        }
    }

    pub fn forcing_at(&self, temp_c: f64) -> S {
        forcing_unchecked(self.family, temp_c, &self.forcing)
    }
}

/// Accumulated forcing for one observation, from the start day to the end
/// of the series.
#[derive(Clone, Debug, PartialEq)]
pub struct HazardPath<S = f64> {
    pub t_start: f64,
    /// `floor(t_start)`; accumulation starts here.
    pub first_day: f64,
    pub day_forcings: Vec<S>,
    /// Prefix sums of `day_forcings`, one longer, starting at zero.
    pub cum_psi: Vec<S>,
    /// End of the last day, where right-censoring is applied.
    pub year_end: f64,
}

impl<S: Scalar> HazardPath<S> {
    pub fn from_forcings(t_start: f64, day_forcings: Vec<S>) -> Result<Self> {
        if day_forcings.is_empty() {
            return Err(Error::Data("hazard path needs at least one day".into()));
        }
        if let Some(bad) = day_forcings
            .iter()
            .map(|f| f.value())
            .find(|f| !(0.0..=1.0).contains(f))
        {
            return Err(Error::Data(format!("daily forcing {bad} outside [0, 1]")));
        }
        let mut cum_psi = Vec::with_capacity(day_forcings.len() + 1);
        let mut acc = S::cst(0.0);
        cum_psi.push(acc);
        for f in &day_forcings {
            acc += *f;
            cum_psi.push(acc);
        }
        let first_day = t_start.floor();
        Ok(Self {
            t_start,
            first_day,
            year_end: first_day + day_forcings.len() as f64,
            day_forcings,
            cum_psi,
        })
    }

    pub fn len_days(&self) -> usize {
        self.day_forcings.len()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && t >= self.first_day && t <= self.year_end {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "time {t} outside hazard path [{}, {}]",
                self.first_day, self.year_end
            )))
        }
    }

    /// Index of the day piece containing `t`, with the end point assigned
    /// to the last piece.
    fn piece(&self, t: f64) -> usize {
        ((t - self.first_day).floor() as usize).min(self.day_forcings.len() - 1)
    }

    /// Accumulated forcing `Psi(t)`.
    fn psi_at(&self, t: f64) -> S {
        let k = self.piece(t);
        let offset = t - (self.first_day + k as f64);
        self.cum_psi[k] + self.day_forcings[k] * offset
    }
}

/// Builds the hazard path for an observation that starts at `t_start`.
pub fn accumulate_forcing<S: Scalar>(
    series: &TemperatureSeries,
    spec: &ModelSpec<S>,
    t_start: f64,
) -> Result<HazardPath<S>> {
    spec.forcing.validate()?;
    accumulate_unchecked(series, spec, t_start)
}

pub(crate) fn accumulate_unchecked<S: Scalar>(
    series: &TemperatureSeries,
    spec: &ModelSpec<S>,
    t_start: f64,
) -> Result<HazardPath<S>> {
    let temps = series.days_from(t_start)?;
    let curve = ForcingCurve::new_unchecked(spec.family, &spec.forcing);
    let forcings = temps.iter().map(|&t| curve.eval(t)).collect();
    HazardPath::from_forcings(t_start, forcings)
}

/// Log of a probability that may be exactly zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogProb<S = f64> {
    Value(S),
    /// Zero probability: a valid but measure-zero outcome.
    Zero,
}

impl<S: Scalar> LogProb<S> {
    /// Collapses to a scalar, mapping [`LogProb::Zero`] to negative infinity.
    pub fn into_scalar(self) -> S {
        match self {
            Self::Value(v) => v,
            Self::Zero => S::cst(f64::NEG_INFINITY),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn value(&self) -> f64 {
        match self {
            Self::Value(v) => v.value(),
            Self::Zero => f64::NEG_INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventOutcome {
    Occurred { day: f64 },
    Censored { at: f64 },
}

pub fn cumulative_hazard_at<S: Scalar>(path: &HazardPath<S>, spec: &ModelSpec<S>, t: f64) -> Result<S> {
    path.check_time(t)?;
    Ok(spec.effective_scale() * path.psi_at(t))
}

pub fn log_survival_at<S: Scalar>(path: &HazardPath<S>, spec: &ModelSpec<S>, t: f64) -> Result<S> {
    let lam = cumulative_hazard_at(path, spec, t)?;
    Ok(-value_unchecked(&spec.warping, lam))
}

pub fn survival_at<S: Scalar>(path: &HazardPath<S>, spec: &ModelSpec<S>, t: f64) -> Result<S> {
    Ok(log_survival_at(path, spec, t)?.exp())
}

/// `ln pi(t) = ln lambda(t) + ln g'(Lambda(t)) - g(Lambda(t))`.
pub fn event_log_density<S: Scalar>(
    path: &HazardPath<S>,
    spec: &ModelSpec<S>,
    t: f64,
) -> Result<LogProb<S>> {
    let lam = cumulative_hazard_at(path, spec, t)?;
    let rate = spec.effective_scale() * path.day_forcings[path.piece(t)];
    Ok(log_density_from_parts(&spec.warping, rate, lam))
}

/// Event log density from the hazard rate and cumulative hazard at a point.
pub(crate) fn log_density_from_parts<S: Scalar>(warping: &WarpingSpec<S>, rate: S, lam: S) -> LogProb<S> {
    if rate.value() <= 0.0 {
        return LogProb::Zero;
    }
    let log_deriv = log_deriv_unchecked(warping, lam);
    if log_deriv.value() == f64::NEG_INFINITY {
        return LogProb::Zero;
    }
    LogProb::Value(rate.ln() + log_deriv - value_unchecked(warping, lam))
}

/// `ln(S(n) - S(n + 1))`, the probability of the event falling in day `n`.
pub fn day_log_prob<S: Scalar>(path: &HazardPath<S>, spec: &ModelSpec<S>, n: i64) -> Result<LogProb<S>> {
    let start = n as f64;
    path.check_time(start)?;
    path.check_time(start + 1.0)?;
    let scale = spec.effective_scale();
    let k = (start - path.first_day) as usize;
    let lam0 = scale * path.cum_psi[k];
    Ok(interval_log_prob(&spec.warping, lam0, scale * path.day_forcings[k]))
}

/// `ln(exp(-g(lam0)) - exp(-g(lam0 + width)))` for `width >= 0`.
///
/// Takes the width directly because differencing two cumulative sums loses
/// the short intervals of cold days.
pub(crate) fn interval_log_prob<S: Scalar>(warping: &WarpingSpec<S>, lam0: S, width: S) -> LogProb<S> {
    let smooth = matches!(warping, WarpingSpec::SoftThreshold { .. } | WarpingSpec::Induced(_));
    let g0 = value_unchecked(warping, lam0);
    if smooth && g0.value() < LN_2 {
        // Survival still above one half: difference the occurred mass, which
        // keeps full precision while g is tiny.
        let f0 = log_occurred_unchecked(warping, lam0);
        let gap = occurred_gap_unchecked(warping, lam0, width);
        if !(gap.value() > 0.0) {
            return LogProb::Zero;
        }
        LogProb::Value(f0 + gap + log1m_exp(-gap))
    } else {
        let gap = gap_unchecked(warping, lam0, width);
        if !(gap.value() > 0.0) {
            return LogProb::Zero;
        }
        LogProb::Value(-g0 + log1m_exp(-gap))
    }
}

pub fn censored_log_prob<S: Scalar>(path: &HazardPath<S>, spec: &ModelSpec<S>, t_c: f64) -> Result<S> {
    log_survival_at(path, spec, t_c)
}

/// Probability mass placed before the accumulation starts, `1 - S(first_day)`.
/// Zero for the standard model; small but positive for the soft threshold.
pub fn truncation_mass<S: Scalar>(spec: &ModelSpec<S>) -> S {
    log_occurred_unchecked(&spec.warping, S::cst(0.0)).exp()
}

/// Draws an event time by inverting `S(t) = u`.
///
/// Mass that the warping assigns before accumulation begins is placed at
/// `first_day`; draws beyond the accumulated hazard at year end are
/// censored.
pub fn sample_event_time(path: &HazardPath, spec: &ModelSpec, u: f64) -> Result<EventOutcome> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("uniform draw must lie in (0, 1), got {u}")));
    }
    let target = warp_inverse(&spec.warping, -u.ln())?;
    if target <= 0.0 {
        return Ok(EventOutcome::Occurred {
            day: path.first_day,
        });
    }
    let scale = spec.effective_scale();
    let total = scale * path.cum_psi[path.len_days()];
    if total < target {
        return Ok(EventOutcome::Censored { at: path.year_end });
    }
    // smallest k with Lambda(first_day + k + 1) >= target
    let k = path.cum_psi[1..].partition_point(|&c| scale * c < target);
    let below = scale * path.cum_psi[k];
    let rate = scale * path.day_forcings[k];
    let frac = ((target - below) / rate).clamp(0.0, 1.0);
    Ok(EventOutcome::Occurred {
        day: path.first_day + k as f64 + frac,
    })
}
