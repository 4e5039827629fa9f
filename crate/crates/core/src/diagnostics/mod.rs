//! Inefficiency factors, effective sample sizes and posterior summaries.

pub mod geweke;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::{ChainOutput, Param};

/// Shortest chain accepted by [`inefficiency_factor`].
pub const MIN_CHAIN_LENGTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IfMethod {
    /// Spectral density at zero from an AIC-selected Yule-Walker AR fit.
    #[default]
    ArSpectrum,
    /// Non-overlapping batch means with batch size `⌊√n⌋`.
    BatchMeans,
}

fn check_chain(chain: &[f64]) -> Result<(f64, f64)> {
    let n = chain.len();
    if n < MIN_CHAIN_LENGTH {
        return Err(Error::Diagnostic(format!(
            "chain of length {n} is shorter than {MIN_CHAIN_LENGTH}"
        )));
    }
    if chain.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diagnostic("chain contains non-finite values".into()));
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let var = chain.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let scale = chain.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(var > 0.0) || var.sqrt() <= 1e-13 * scale {
        return Err(Error::Diagnostic("chain is constant".into()));
    }
    Ok((mean, var))
}

/// `γ̂₀ / s²` with `γ̂₀` the spectral density at frequency zero.
pub fn inefficiency_factor(chain: &[f64]) -> Result<f64> {
    inefficiency_factor_with(chain, IfMethod::ArSpectrum)
}

pub fn inefficiency_factor_with(chain: &[f64], method: IfMethod) -> Result<f64> {
    let (mean, var) = check_chain(chain)?;
    let spec = match method {
        IfMethod::ArSpectrum => ar_spectrum0(chain, mean),
        IfMethod::BatchMeans => batch_means_spectrum0(chain, mean),
    };
    Ok(spec / var)
}

fn ar_spectrum0(chain: &[f64], mean: f64) -> f64 {
    let n = chain.len();
    let max_order = (n / 10).min(50);
    let x: Vec<f64> = chain.iter().map(|v| v - mean).collect();
    let acov: Vec<f64> = (0..=max_order)
        .map(|k| {
            x[..n - k]
                .iter()
                .zip(&x[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect();

    // Levinson-Durbin, keeping the AIC-best coefficient vector.
    let nf = n as f64;
    let mut coef: Vec<f64> = Vec::with_capacity(max_order);
    let mut v = acov[0];
    let mut best = (nf * v.ln(), 0usize, v, Vec::new());
    for k in 1..=max_order {
        let mut num = acov[k];
        for (j, a) in coef.iter().enumerate() {
            num -= a * acov[k - 1 - j];
        }
        let pacf = num / v;
        let prev = coef.clone();
        for j in 0..prev.len() {
            coef[j] = prev[j] - pacf * prev[prev.len() - 1 - j];
        }
        coef.push(pacf);
        v *= 1.0 - pacf * pacf;
        if !(v > 0.0) {
            break;
        }
        let aic = nf * v.ln() + 2.0 * k as f64;
        if aic < best.0 {
            best = (aic, k, v, coef.clone());
        }
    }
    let (_, order, v, coef) = best;
    let var_pred = v * nf / (nf - (order as f64 + 1.0));
    let s: f64 = coef.iter().sum();
    var_pred / ((1.0 - s) * (1.0 - s))
}

fn batch_means_spectrum0(chain: &[f64], mean: f64) -> f64 {
    let n = chain.len();
    let b = (n as f64).sqrt().floor() as usize;
    let batches = n / b;
    let ss: f64 = chain
        .chunks_exact(b)
        .map(|c| {
            let m = c.iter().sum::<f64>() / b as f64;
            (m - mean).powi(2)
        })
        .sum();
    b as f64 * ss / (batches - 1) as f64
}

/// Sample quantile by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    /// `None` when the inefficiency factor is undefined for this chain.
    pub inefficiency: Option<f64>,
    pub ess: Option<f64>,
    pub note: Option<String>,
}

impl ParamSummary {
    pub fn from_chain(name: &str, chain: &[f64], method: IfMethod) -> Result<Self> {
        if chain.is_empty() {
            return Err(Error::Diagnostic(format!("no draws for {name}")));
        }
        let n = chain.len();
        let mean = chain.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (chain.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = chain.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (inefficiency, ess, note) = match inefficiency_factor_with(chain, method) {
            Ok(f) => (Some(f), Some(n as f64 / f), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        Ok(ParamSummary {
            name: name.to_string(),
            mean,
            sd,
            q05: quantile_sorted(&sorted, 0.05),
            q50: quantile_sorted(&sorted, 0.5),
            q95: quantile_sorted(&sorted, 0.95),
            inefficiency,
            ess,
            note,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub draws: usize,
    pub params: Vec<ParamSummary>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Mean, sd, 5/50/95% quantiles, IF and ESS for μ, φ and σ. An undefined IF
/// for one parameter leaves the others intact.
pub fn summarize(out: &ChainOutput) -> Result<PosteriorSummary> {
    summarize_with(out, IfMethod::ArSpectrum)
}

pub fn summarize_with(out: &ChainOutput, method: IfMethod) -> Result<PosteriorSummary> {
    let params = Param::ALL
        .iter()
        .map(|&p| ParamSummary::from_chain(p.name(), &out.column(p), method))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSummary {
        draws: out.draws.len(),
        params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencySummary {
    pub if_mu: f64,
    pub if_phi: f64,
    pub if_sigma: f64,
    pub ess_mu: f64,
    pub ess_phi: f64,
    pub ess_sigma: f64,
    pub draws: usize,
}

pub fn efficiency(out: &ChainOutput) -> Result<EfficiencySummary> {
    let m = out.draws.len();
    let f = |p: Param| inefficiency_factor(&out.column(p));
    let (a, b, c) = (f(Param::Mu)?, f(Param::Phi)?, f(Param::Sigma)?);
    Ok(EfficiencySummary {
        if_mu: a,
        if_phi: b,
        if_sigma: c,
        ess_mu: m as f64 / a,
        ess_phi: m as f64 / b,
        ess_sigma: m as f64 / c,
        draws: m,
    })
}
