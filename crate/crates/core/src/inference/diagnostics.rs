//! Rank-normalized split R-hat and effective sample size.

use serde::{Deserialize, Serialize};

use crate::math::std_normal_inv_cdf;

pub const RHAT_THRESHOLD: f64 = 1.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q5: f64,
    pub median: f64,
    pub q95: f64,
    /// `None` when the draws are degenerate.
    pub rhat: Option<f64>,
    pub ess_bulk: Option<f64>,
    pub mcse_mean: Option<f64>,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub mean: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub parameters: Vec<ParameterSummary>,
    pub divergences: Vec<usize>,
    pub total_divergences: usize,
    pub max_rhat: Option<f64>,
    /// Parameters whose R-hat exceeds the threshold or cannot be computed.
    pub flagged: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_mass: Option<TruncationReport>,
}

impl Diagnostics {
    /// No divergences and every R-hat below the threshold.
    pub fn is_clean(&self) -> bool {
        self.total_divergences == 0 && self.flagged.is_empty()
    }
}

/// Summarizes named `[chain][iteration]` sequences.
pub fn compute_diagnostics(params: &[(String, Vec<Vec<f64>>)], divergences: &[usize]) -> Diagnostics {
    let parameters: Vec<ParameterSummary> = params
        .iter()
        .map(|(name, chains)| summarize(name, chains))
        .collect();
    let max_rhat = parameters
        .iter()
        .filter_map(|p| p.rhat)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    let flagged = parameters
        .iter()
        .filter(|p| p.rhat.map_or(true, |r| !(r <= RHAT_THRESHOLD)))
        .map(|p| p.name.clone())
        .collect();
    Diagnostics {
        parameters,
        divergences: divergences.to_vec(),
        total_divergences: divergences.iter().sum(),
        max_rhat,
        flagged,
        truncation_mass: None,
    }
}

pub fn summarize(name: &str, chains: &[Vec<f64>]) -> ParameterSummary {
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / n;
    let sd = (pooled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let degenerate = is_degenerate(chains);
    let (rhat, ess_bulk, mcse_mean) = if degenerate {
        (None, None, None)
    } else {
        let ess = ess(chains);
        (
            Some(rank_normalized_rhat(chains)),
            Some(ess_bulk(chains)),
            Some(sd / ess.sqrt()),
        )
    };
    ParameterSummary {
        name: name.to_string(),
        mean,
        sd,
        q5: quantile_sorted(&sorted, 0.05),
        median: quantile_sorted(&sorted, 0.5),
        q95: quantile_sorted(&sorted, 0.95),
        rhat,
        ess_bulk,
        mcse_mean,
        degenerate,
    }
}

/// True when R-hat is undefined: fewer than two chains or four draws, a
/// non-finite value, or a chain with no variation.
pub fn is_degenerate(chains: &[Vec<f64>]) -> bool {
    let min_len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    chains.len() < 2
        || min_len < 4
        || chains.iter().flatten().any(|x| !x.is_finite())
        || chains.iter().any(|c| c.iter().all(|&x| x == c[0]))
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Splits each chain in half, dropping the middle draw of odd lengths.
pub fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    chains
        .iter()
        .flat_map(|c| {
            let half = c.len() / 2;
            [c[..half].to_vec(), c[c.len() - half..].to_vec()]
        })
        .collect()
}

/// Classic potential scale reduction over the given chains.
pub fn rhat_basic(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Pooled ranks mapped through the normal quantile function, chain shape kept.
pub fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut indexed: Vec<(f64, usize, usize)> = chains
        .iter()
        .enumerate()
        .flat_map(|(c, xs)| xs.iter().enumerate().map(move |(i, &x)| (x, c, i)))
        .collect();
    indexed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = indexed.len() as f64;
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut i = 0;
    while i < indexed.len() {
        let mut j = i;
        while j + 1 < indexed.len() && indexed[j + 1].0 == indexed[i].0 {
            j += 1;
        }
        // ties share their average rank (ranks are 1-based)
        let rank = (i + j) as f64 / 2.0 + 1.0;
        let z = std_normal_inv_cdf((rank - 0.375) / (total + 0.25));
        for &(_, c, k) in &indexed[i..=j] {
            out[c][k] = z;
        }
        i = j + 1;
    }
    out
}

/// Maximum of the bulk and folded rank-normalized split R-hat.
pub fn rank_normalized_rhat(chains: &[Vec<f64>]) -> f64 {
    let split = split_chains(chains);
    let bulk = rhat_basic(&rank_normalize(&split));
    let mut pooled: Vec<f64> = split.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let med = quantile_sorted(&pooled, 0.5);
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|x| (x - med).abs()).collect())
        .collect();
    let tail = rhat_basic(&rank_normalize(&folded));
    bulk.max(tail)
}

/// Effective sample size of rank-normalized split chains.
pub fn ess_bulk(chains: &[Vec<f64>]) -> f64 {
    ess_raw(&rank_normalize(&split_chains(chains)))
}

/// Effective sample size of split chains on the original scale.
pub fn ess(chains: &[Vec<f64>]) -> f64 {
    ess_raw(&split_chains(chains))
}

fn autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    (0..n)
        .map(|lag| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect()
}

/// Multi-chain ESS with Geyer's initial monotone sequence.
pub fn ess_raw(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    if n < 4 {
        return f64::NAN;
    }
    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c)).collect();
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let chain_var: Vec<f64> = acov.iter().map(|a| a[0] * nf / (nf - 1.0)).collect();
    let w = chain_var.iter().sum::<f64>() / m as f64;
    let mut var_plus = w * (nf - 1.0) / nf;
    if m > 1 {
        let grand = means.iter().sum::<f64>() / m as f64;
        var_plus += means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    }
    if !(var_plus > 0.0) {
        return f64::NAN;
    }
    let rho = |lag: usize| -> f64 {
        let mean_acov = acov.iter().map(|a| a[lag]).sum::<f64>() / m as f64;
        1.0 - (w - mean_acov) / var_plus
    };
    let mut rho_hat = vec![0.0; n];
    rho_hat[0] = 1.0;
    rho_hat[1] = rho(1);
    let mut t = 1;
    // Sum autocorrelation pairs while they stay positive.
    while t + 2 < n {
        let a = rho(t + 1);
        let b = rho(t + 2);
        if a + b < 0.0 {
            break;
        }
        rho_hat[t + 1] = a;
        rho_hat[t + 2] = b;
        t += 2;
    }
    let max_t = t;
    // Enforce a monotone decreasing sequence of pair sums.
    let mut k = 1;
    while k + 2 <= max_t {
        let prev = rho_hat[k - 1] + rho_hat[k];
        if rho_hat[k + 1] + rho_hat[k + 2] > prev {
            rho_hat[k + 1] = prev / 2.0;
            rho_hat[k + 2] = prev / 2.0;
        }
        k += 2;
    }
    let sum: f64 = rho_hat[..=max_t].iter().sum();
    let tau = -1.0 + 2.0 * sum;
    let total = (m * n) as f64;
    let tau = tau.max(1.0 / total.log10());
    total / tau
}
