use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::diagnostics::{compute_diagnostics, Diagnostics, TruncationReport};
use super::hmc::{run_hmc, ChainDraws, HmcConfig};
use super::model::{LikelihoodForm, ModelKind, ModelTemplate, ParameterBlock};
use super::posterior::PhenologyPosterior;
use super::prior::PriorConfig;
use super::transform::to_constrained;
use crate::error::{Error, Result};
use crate::phenology::ObservationSet;
use crate::survival::truncation_mass;

/// Key under which per-draw log posterior values are stored in `draws`.
pub const LOG_POSTERIOR_KEY: &str = "log_posterior";

/// Everything a fit needs besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub template: ModelTemplate,
    pub priors: PriorConfig,
    pub likelihood: LikelihoodForm,
    pub hmc: HmcConfig,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub settings: FitSettings,
    pub chains: ChainDraws,
    /// `[chain][iteration]` constrained parameter blocks.
    pub blocks: Vec<Vec<ParameterBlock>>,
    pub diagnostics: Diagnostics,
}

pub fn fit(data: &ObservationSet, settings: &FitSettings) -> Result<FitResult> {
    let posterior = PhenologyPosterior::new(
        settings.template,
        data,
        settings.priors.clone(),
        settings.likelihood,
    )?;
    let chains = run_hmc(&posterior, &settings.hmc)?;
    let kind = settings.template.kind;
    let blocks: Vec<Vec<ParameterBlock>> = chains
        .unconstrained
        .iter()
        .map(|c| {
            c.iter()
                .map(|q| to_constrained(q, kind).map(|(b, _)| b))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let named: Vec<(String, Vec<Vec<f64>>)> = kind
        .constrained_names()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let seqs = blocks
                .iter()
                .map(|c| c.iter().map(|b| b.constrained_values(kind)[i]).collect())
                .collect();
            (name.to_string(), seqs)
        })
        .collect();
    let mut diagnostics = compute_diagnostics(&named, &chains.divergences);
    diagnostics.truncation_mass = truncation_report(&settings.template, &blocks);
    Ok(FitResult {
        settings: settings.clone(),
        chains,
        blocks,
        diagnostics,
    })
}

fn truncation_report(template: &ModelTemplate, blocks: &[Vec<ParameterBlock>]) -> Option<TruncationReport> {
    if !matches!(template.kind, ModelKind::Threshold | ModelKind::InducedNormal) {
        return None;
    }
    let masses: Vec<f64> = blocks
        .iter()
        .flatten()
        .filter_map(|b| template.survival_spec(b, None).ok())
        .map(|s| truncation_mass(&s))
        .collect();
    if masses.is_empty() {
        return None;
    }
    Some(TruncationReport {
        mean: masses.iter().sum::<f64>() / masses.len() as f64,
        max: masses.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

impl FitResult {
    pub fn all_blocks(&self) -> Vec<ParameterBlock> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn to_document(&self, config_echo: serde_json::Value) -> FitDocument {
        let kind = self.settings.template.kind;
        let mut draws = BTreeMap::new();
        for (i, name) in kind.constrained_names().iter().enumerate() {
            draws.insert(
                name.to_string(),
                self.blocks
                    .iter()
                    .map(|c| c.iter().map(|b| b.constrained_values(kind)[i]).collect())
                    .collect(),
            );
        }
        draws.insert(LOG_POSTERIOR_KEY.to_string(), self.chains.log_density.clone());
        FitDocument {
            model: ModelEcho {
                kind,
                forcing_family: self.settings.template.forcing_family,
                delta: self.settings.template.delta,
                likelihood: self.settings.likelihood,
            },
            draws,
            diagnostics: FitDiagnostics {
                summary: self.diagnostics.clone(),
                warmup_divergences: self.chains.warmup_divergences.clone(),
                step_sizes: self.chains.step_sizes.clone(),
                mean_accept: self.chains.mean_accept.clone(),
                leapfrog_steps: self.chains.leapfrog_steps.clone(),
            },
            config_echo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEcho {
    pub kind: ModelKind,
    pub forcing_family: crate::forcing::ForcingFamily,
    pub delta: f64,
    pub likelihood: LikelihoodForm,
}

impl ModelEcho {
    pub fn template(&self) -> ModelTemplate {
        ModelTemplate::new(self.kind, self.forcing_family, self.delta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    #[serde(flatten)]
    pub summary: Diagnostics,
    pub warmup_divergences: Vec<usize>,
    pub step_sizes: Vec<f64>,
    pub mean_accept: Vec<f64>,
    pub leapfrog_steps: Vec<usize>,
}

/// The serialized form of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub model: ModelEcho,
    /// Parameter name to `[chain][iteration]` draws.
    pub draws: BTreeMap<String, Vec<Vec<f64>>>,
    pub diagnostics: FitDiagnostics,
    pub config_echo: serde_json::Value,
}

impl FitDocument {
    /// Parameter blocks of all draws, chains concatenated in order.
    pub fn blocks(&self) -> Result<Vec<ParameterBlock>> {
        let kind = self.model.kind;
        let names = kind.constrained_names();
        let columns: Vec<&Vec<Vec<f64>>> = names
            .iter()
            .map(|n| {
                self.draws
                    .get(*n)
                    .ok_or_else(|| Error::Data(format!("fit document has no draws for `{n}`")))
            })
            .collect::<Result<_>>()?;
        let flat: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| c.iter().flatten().copied().collect())
            .collect();
        let n = flat[0].len();
        if flat.iter().any(|c| c.len() != n) {
            return Err(Error::Data("fit document draw columns differ in length".into()));
        }
        Ok((0..n)
            .map(|i| {
                let (t_min, t_opt, t_max) = (flat[0][i], flat[1][i], flat[2][i]);
                match kind {
                    ModelKind::Standard => {
                        ParameterBlock::from_temperatures(t_min, t_opt, t_max, None, None, Some(flat[3][i]))
                    }
                    _ => ParameterBlock::from_temperatures(
                        t_min,
                        t_opt,
                        t_max,
                        Some(flat[3][i]),
                        Some(flat[4][i]),
                        None,
                    ),
                }
            })
            .collect())
    }
}
