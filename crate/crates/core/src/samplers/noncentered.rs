//! Parameter updates for the non-centered parameterization.
//!
//! Given `h̃` and the indicators, `ỹ_t − m_{r_t} = μ + σ h̃_t + s_{r_t} ε_t` is a
//! heteroskedastic linear regression in `β = (μ, σ)`, so both are drawn
//! exactly. φ only enters the AR(1) prior of `h̃` and gets an MH step with
//! the flat-prior regression as proposal.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{AcceptanceStats, Tally};
use crate::dens::ln_normal;
use crate::error::{Error, Result};
use crate::mixture::{MixtureState, MixtureTable};
use crate::model::{Dataset, LatentPath, Parameters, Priors};

/// `(mean, variance)` of the φ proposal, `N(Σ h̃_t h̃_{t+1} / Σ h̃_t², 1 / Σ h̃_t²)`
/// with sums over `t = 0 … T−1`. `None` if the path is identically zero.
pub fn phi_proposal(ht: &[f64]) -> Option<(f64, f64)> {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for w in ht.windows(2) {
        sxx += w[0] * w[0];
        sxy += w[0] * w[1];
    }
    if !(sxx > 0.0 && sxx.is_finite()) {
        return None;
    }
    Some((sxy / sxx, 1.0 / sxx))
}

fn ln_phi_target(h0: f64, phi: f64, priors: &Priors, drop_initial_state: bool) -> f64 {
    if !(phi.abs() < 1.0) {
        return f64::NEG_INFINITY;
    }
    let v = priors.ln_prior_phi(phi);
    if drop_initial_state {
        v
    } else {
        v + ln_normal(h0, 0.0, 1.0 / (1.0 - phi * phi))
    }
}

/// `log R = log[p(h̃₀ | φ_new) p(φ_new) / (p(h̃₀ | φ_old) p(φ_old))]`.
pub fn log_ratio_phi(
    h0: f64,
    old: f64,
    new: f64,
    priors: &Priors,
    drop_initial_state: bool,
) -> f64 {
    let n = ln_phi_target(h0, new, priors, drop_initial_state);
    if n == f64::NEG_INFINITY {
        return n;
    }
    n - ln_phi_target(h0, old, priors, drop_initial_state)
}

pub(crate) fn update_phi<R: Rng + ?Sized>(
    p: &mut Parameters,
    ht: &[f64],
    priors: &Priors,
    drop_initial_state: bool,
    rng: &mut R,
    stats: &mut AcceptanceStats,
) {
    let Some((mean, var)) = phi_proposal(ht) else {
        stats.singular += 1;
        return;
    };
    let z: f64 = rng.sample(StandardNormal);
    let phi = mean + var.sqrt() * z;
    let log_r = log_ratio_phi(ht[0], p.phi, phi, priors, drop_initial_state);
    if accept(log_r, rng, &mut stats.nc_phi) {
        p.phi = phi;
    }
}

fn accept<R: Rng + ?Sized>(log_r: f64, rng: &mut R, tally: &mut Tally) -> bool {
    tally.proposed += 1;
    if log_r == f64::NEG_INFINITY || log_r.is_nan() {
        return false;
    }
    let u: f64 = rng.random();
    let ok = log_r >= 0.0 || u.ln() < log_r;
    if ok {
        tally.accepted += 1;
    }
    ok
}

/// Weighted sums of the `(μ, σ)` regression over `t = 1 … T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionSums {
    /// `Σ 1/s²`
    pub w: f64,
    /// `Σ h̃/s²`
    pub wh: f64,
    /// `Σ h̃²/s²`
    pub whh: f64,
    /// `Σ (ỹ − m)/s²`
    pub wy: f64,
    /// `Σ h̃ (ỹ − m)/s²`
    pub why: f64,
}

impl RegressionSums {
    pub fn new(data: &Dataset, mix: &MixtureState, ht: &[f64], table: &MixtureTable) -> Self {
        let mut s = RegressionSums {
            w: 0.0,
            wh: 0.0,
            whh: 0.0,
            wy: 0.0,
            why: 0.0,
        };
        for ((&yt, &r), &h) in data.y_tilde.iter().zip(&mix.indicators).zip(&ht[1..]) {
            let iv = table.inv_variance(r);
            let z = yt - table.mean(r);
            s.w += iv;
            s.wh += iv * h;
            s.whh += iv * h * h;
            s.wy += iv * z;
            s.why += iv * h * z;
        }
        s
    }
}

/// Gaussian posterior of `β = (μ, σ)` under `β ~ N((b_μ, 0), diag(B_μ, B_σ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcPosterior {
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    l11: f64,
    l21: f64,
    l22: f64,
}

impl NcPosterior {
    pub fn new(s: &RegressionSums, priors: &Priors) -> Result<Self> {
        let p11 = 1.0 / priors.mu_variance + s.w;
        let p12 = s.wh;
        let p22 = 1.0 / priors.sigma2_scale + s.whh;
        let r0 = priors.mu_mean / priors.mu_variance + s.wy;
        let r1 = s.why;
        let det = p11 * p22 - p12 * p12;
        if !(p11 > 0.0 && det > 0.0 && det.is_finite()) {
            return Err(Error::NotPositiveDefinite { index: 1 });
        }
        let mean = [(p22 * r0 - p12 * r1) / det, (p11 * r1 - p12 * r0) / det];
        let l11 = p11.sqrt();
        let l21 = p12 / l11;
        let l22 = (p22 - l21 * l21).max(det / p11).sqrt();
        Ok(NcPosterior {
            mean,
            covariance: [[p22 / det, -p12 / det], [-p12 / det, p11 / det]],
            l11,
            l21,
            l22,
        })
    }

    pub fn draw(&self, z: [f64; 2]) -> [f64; 2] {
        let x2 = z[1] / self.l22;
        let x1 = (z[0] - self.l21 * x2) / self.l11;
        [self.mean[0] + x1, self.mean[1] + x2]
    }
}

/// `(b_{T,μ}, B_{T,μ})` for μ given σ.
pub fn mu_conditional(s: &RegressionSums, sigma: f64, priors: &Priors) -> (f64, f64) {
    let var = 1.0 / (s.w + 1.0 / priors.mu_variance);
    (
        var * (s.wy - sigma * s.wh + priors.mu_mean / priors.mu_variance),
        var,
    )
}

/// `(b_{T,σ}, B_{T,σ})` for σ given μ.
pub fn sigma_conditional(s: &RegressionSums, mu: f64, priors: &Priors) -> (f64, f64) {
    let var = 1.0 / (s.whh + 1.0 / priors.sigma2_scale);
    (var * (s.why - mu * s.wh), var)
}

/// Draws `(μ, σ)` jointly (`three_block = false`) or one after the other,
/// then folds a negative σ back by flipping the sign of `h̃`.
pub(crate) fn update_mu_sigma<R: Rng + ?Sized>(
    p: &mut Parameters,
    path: &mut LatentPath,
    data: &Dataset,
    mix: &MixtureState,
    table: &MixtureTable,
    priors: &Priors,
    three_block: bool,
    rng: &mut R,
) -> Result<()> {
    let s = RegressionSums::new(data, mix, &path.states, table);
    let (mu, sigma) = if three_block {
        let (m, v) = mu_conditional(&s, p.sigma, priors);
        let z: f64 = rng.sample(StandardNormal);
        let mu = m + v.sqrt() * z;
        let (m, v) = sigma_conditional(&s, mu, priors);
        let z: f64 = rng.sample(StandardNormal);
        (mu, m + v.sqrt() * z)
    } else {
        let post = NcPosterior::new(&s, priors)?;
        let z = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let [mu, sigma] = post.draw(z);
        (mu, sigma)
    };
    if sigma == 0.0 || !sigma.is_finite() || !mu.is_finite() {
        return Err(Error::Domain(format!(
            "degenerate draw mu={mu}, sigma={sigma}"
        )));
    }
    p.mu = mu;
    if sigma < 0.0 {
        p.sigma = -sigma;
        path.states.iter_mut().for_each(|h| *h = -*h);
    } else {
        p.sigma = sigma;
    }
    Ok(())
}
