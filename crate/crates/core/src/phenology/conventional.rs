use super::data::EventObservation;
use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::math::normal_log_density;
use crate::survival::HazardPath;

/// Normal log density of the forcing accumulated from the start day
/// through the end of the observed event day.
///
/// `path` must start at the observation's start day with unit hazard
/// scale, so that it holds plain accumulated forcing.
pub fn conventional_log_lik<S: Scalar>(
    obs: &EventObservation,
    path: &HazardPath<S>,
    psi0: S,
    sigma: S,
) -> Result<S> {
    let end = match (obs.censored, obs.end_day) {
        (false, Some(end)) => end,
        _ => {
            return Err(Error::Unsupported(
                "the conventional model has no likelihood for censored observations".into(),
            ))
        }
    };
    if !(sigma.value() > 0.0) {
        return Err(Error::ParameterDomain(format!("sigma must be positive, got {}", sigma.value())));
    }
    if path.first_day != obs.start_day as f64 {
        return Err(Error::Data(format!(
            "path starts on day {} but the observation starts on day {}",
            path.first_day, obs.start_day
        )));
    }
    let k = end as usize - obs.start_day as usize + 1;
    let psi = *path.cum_psi.get(k).ok_or_else(|| {
        Error::Data(format!("event day {end} lies beyond the hazard path"))
    })?;
    Ok(normal_log_density(psi, psi0, sigma))
}
