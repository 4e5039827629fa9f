//! Parameter updates for the centered parameterization.
//!
//! All proposals come from the conjugate regression `h_t = γ + φ h_{t−1} + σ η_t`
//! (`t = 1 … T`) under the auxiliary prior `(γ, φ) | σ² ~ N(0, σ² B₀)` with
//! `B₀ = diag(B₀¹¹, B₀²²)`. The Metropolis-Hastings correction swaps the
//! auxiliary prior for the actual one and adds the initial-state factor
//! `p(h_0 | γ, φ, σ²)` that the regression ignores.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{AcceptanceStats, Tally};
use crate::dens::ln_normal;
use crate::model::{Parameters, Priors};

/// Variances of the auxiliary regression prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxPrior {
    pub gamma_variance: f64,
    pub phi_variance: f64,
}

impl Default for AuxPrior {
    fn default() -> Self {
        AuxPrior {
            gamma_variance: 1e12,
            phi_variance: 1e8,
        }
    }
}

/// What the acceptance ratios need besides the state.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub priors: &'a Priors,
    pub aux: AuxPrior,
    /// Test hook: leave out `p(h_0 | ·)` (breaks the sampler on purpose).
    pub drop_initial_state: bool,
}

/// Sufficient statistics of the lagged regression, with the lags centered
/// around their mean so that nearly constant paths stay well conditioned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagMoments {
    pub periods: f64,
    pub h0: f64,
    /// Mean of `h_0 … h_{T−1}`.
    pub lag_mean: f64,
    /// `Σ (h_{t−1} − m)²`.
    pub lag_css: f64,
    /// `Σ (h_{t−1} − m) h_t`.
    pub cross_centered: f64,
    /// `Σ_{t=1}^T h_t`.
    pub sum_current: f64,
    /// `Σ_{t=0}^{T−1} h_t`.
    pub sum_lag: f64,
    /// `Σ_{t=0}^{T−1} h_t²`.
    pub sum_lag_sq: f64,
    /// `Σ_{t=1}^T h_{t−1} h_t`.
    pub sum_cross: f64,
}

impl LagMoments {
    pub fn from_path(h: &[f64]) -> Self {
        let n = h.len() - 1;
        let lags = &h[..n];
        let cur = &h[1..];
        let sum_lag: f64 = lags.iter().sum();
        let m = sum_lag / n as f64;
        let mut lag_css = 0.0;
        let mut cross_centered = 0.0;
        let mut sum_current = 0.0;
        let mut sum_lag_sq = 0.0;
        let mut sum_cross = 0.0;
        for (&a, &b) in lags.iter().zip(cur) {
            let d = a - m;
            lag_css += d * d;
            cross_centered += d * b;
            sum_current += b;
            sum_lag_sq += a * a;
            sum_cross += a * b;
        }
        LagMoments {
            periods: n as f64,
            h0: h[0],
            lag_mean: m,
            lag_css,
            cross_centered,
            sum_current,
            sum_lag,
            sum_lag_sq,
            sum_cross,
        }
    }
}

/// `N₂(b_T, σ² B_T)` proposal for `(γ, φ)`, kept as the Cholesky factor of
/// the precision `B_T⁻¹ = X'X + B₀⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPosterior {
    pub mean: [f64; 2],
    l11: f64,
    l21: f64,
    l22: f64,
}

impl PairPosterior {
    pub fn new(m: &LagMoments, aux: AuxPrior) -> Option<Self> {
        let e1 = 1.0 / aux.gamma_variance;
        let e2 = 1.0 / aux.phi_variance;
        let n = m.periods;
        let a = n + e1;
        // Schur complement of the (1,1) entry, written without cancellation.
        let d = m.lag_css + e2 + n * m.lag_mean * m.lag_mean * e1 / a;
        let num = m.cross_centered + m.lag_mean * m.sum_current * e1 / a;
        if !(a > 0.0 && d > 0.0 && d.is_finite() && num.is_finite()) {
            return None;
        }
        let phi = num / d;
        let gamma = (m.sum_current - m.sum_lag * phi) / a;
        let l11 = a.sqrt();
        Some(PairPosterior {
            mean: [gamma, phi],
            l11,
            l21: m.sum_lag / l11,
            l22: d.sqrt(),
        })
    }

    /// `B_T` (unscaled by σ²) as `[[b11, b12], [b12, b22]]`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let i11 = 1.0 / self.l11;
        let i22 = 1.0 / self.l22;
        let i21 = -self.l21 * i11 * i22;
        [[i11 * i11 + i21 * i21, i21 * i22], [i21 * i22, i22 * i22]]
    }

    /// `b_T + σ L⁻ᵀ z`.
    pub fn draw(&self, sigma: f64, z: [f64; 2]) -> [f64; 2] {
        let x2 = z[1] / self.l22;
        let x1 = (z[0] - self.l21 * x2) / self.l11;
        [self.mean[0] + sigma * x1, self.mean[1] + sigma * x2]
    }

    /// `½[(h − X b)'(h − X b) + b' B₀⁻¹ b]`, the inverse-gamma scale of the
    /// σ² marginal.
    pub fn scale(&self, h: &[f64], aux: AuxPrior) -> f64 {
        let [g, p] = self.mean;
        let ss: f64 = h
            .windows(2)
            .map(|w| {
                let r = w[1] - g - p * w[0];
                r * r
            })
            .sum();
        0.5 * (ss + g * g / aux.gamma_variance + p * p / aux.phi_variance)
    }
}

/// Log of the part of the centered target that the regression proposal does
/// not already account for, as a function of `(γ, φ)` at a given σ².
pub fn ln_correction(h0: f64, gamma: f64, phi: f64, sigma2: f64, tg: &Target) -> f64 {
    if !(phi.abs() < 1.0) || !(sigma2 > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut v = tg.priors.ln_prior_gamma_given_phi(gamma, phi) + tg.priors.ln_prior_phi(phi)
        - ln_normal(gamma, 0.0, sigma2 * tg.aux.gamma_variance)
        - ln_normal(phi, 0.0, sigma2 * tg.aux.phi_variance);
    if !tg.drop_initial_state {
        let mu = gamma / (1.0 - phi);
        v += ln_normal(h0, mu, sigma2 / (1.0 - phi * phi));
    }
    v
}

/// Same for the one-block proposal, which also draws σ² (under the
/// auxiliary `p(σ²) ∝ σ⁻¹`).
pub fn ln_correction_joint(h0: f64, gamma: f64, phi: f64, sigma2: f64, tg: &Target) -> f64 {
    let base = ln_correction(h0, gamma, phi, sigma2, tg);
    if base == f64::NEG_INFINITY {
        return base;
    }
    base + tg.priors.ln_prior_sigma2(sigma2) + 0.5 * sigma2.ln()
}

/// `log R` for moving `(γ, φ)` from `old` to `new` at fixed σ². Also serves
/// the single-coordinate steps of the three-block sampler, where the
/// coordinate held fixed cancels.
pub fn log_ratio_pair(h0: f64, old: [f64; 2], new: [f64; 2], sigma2: f64, tg: &Target) -> f64 {
    let n = ln_correction(h0, new[0], new[1], sigma2, tg);
    if n == f64::NEG_INFINITY {
        return n;
    }
    n - ln_correction(h0, old[0], old[1], sigma2, tg)
}

/// `log R` of the one-block move from `old` to `new`.
pub fn log_ratio_joint(h0: f64, old: &Parameters, new: &Parameters, tg: &Target) -> f64 {
    let n = ln_correction_joint(h0, new.gamma(), new.phi, new.sigma2(), tg);
    if n == f64::NEG_INFINITY {
        return n;
    }
    n - ln_correction_joint(h0, old.gamma(), old.phi, old.sigma2(), tg)
}

/// `log R = (σ²_old − σ²_new) / (2 B_σ)`.
pub fn log_ratio_sigma2(old: f64, new: f64, scale: f64) -> f64 {
    if !(new > 0.0) {
        return f64::NEG_INFINITY;
    }
    (old - new) / (2.0 * scale)
}

/// Proposal moments `(mean, variance / σ²)` for φ given γ.
pub fn phi_proposal(m: &LagMoments, gamma: f64, aux: AuxPrior) -> (f64, f64) {
    let den = m.sum_lag_sq + 1.0 / aux.phi_variance;
    ((m.sum_cross - gamma * m.sum_lag) / den, 1.0 / den)
}

/// Proposal moments `(mean, variance / σ²)` for γ given φ.
pub fn gamma_proposal(m: &LagMoments, phi: f64, aux: AuxPrior) -> (f64, f64) {
    let den = m.periods + 1.0 / aux.gamma_variance;
    ((m.sum_current - phi * m.sum_lag) / den, 1.0 / den)
}

/// Residual sum for the σ² full conditional, `IG(T/2, C_T)`.
pub fn sigma2_scale(h: &[f64], mu: f64, phi: f64) -> f64 {
    let ss: f64 = h
        .windows(2)
        .map(|w| {
            let r = (w[1] - mu) - phi * (w[0] - mu);
            r * r
        })
        .sum();
    let d0 = h[0] - mu;
    0.5 * (ss + d0 * d0 * (1.0 - phi * phi))
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

fn inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    // shape > 0 is guaranteed by T >= 2.
    let g = Gamma::new(shape, 1.0).expect("positive shape");
    scale / g.sample(rng)
}

fn normal_pair<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

/// One MH step on `(μ, φ, σ²)` jointly. Draws σ² from its auxiliary
/// marginal, then `(γ, φ) | σ²`, then the uniform.
pub fn update_oneblock<R: Rng + ?Sized>(
    p: &mut Parameters,
    h: &[f64],
    tg: &Target,
    rng: &mut R,
    stats: &mut AcceptanceStats,
) -> bool {
    let m = LagMoments::from_path(h);
    let Some(post) = PairPosterior::new(&m, tg.aux) else {
        stats.singular += 1;
        return false;
    };
    let c_t = post.scale(h, tg.aux);
    if !(c_t > 0.0 && c_t.is_finite()) {
        stats.singular += 1;
        return false;
    }
    let sigma2 = inverse_gamma(0.5 * (m.periods - 1.0), c_t, rng);
    let [gamma, phi] = post.draw(sigma2.sqrt(), normal_pair(rng));
    let new = Parameters {
        mu: gamma / (1.0 - phi),
        phi,
        sigma: sigma2.sqrt(),
    };
    let log_r = if new.is_valid() && sigma2 > 0.0 {
        log_ratio_joint(m.h0, p, &new, tg)
    } else {
        f64::NEG_INFINITY
    };
    let ok = accept(log_r, rng, &mut stats.joint);
    if ok {
        *p = new;
    }
    ok
}

/// Two MH steps: `(γ, φ) | σ²`, then `σ² | μ, φ`.
pub fn update_twoblock<R: Rng + ?Sized>(
    p: &mut Parameters,
    h: &[f64],
    tg: &Target,
    rng: &mut R,
    stats: &mut AcceptanceStats,
) {
    let m = LagMoments::from_path(h);
    match PairPosterior::new(&m, tg.aux) {
        Some(post) => {
            let sigma2 = p.sigma2();
            let new = post.draw(p.sigma, normal_pair(rng));
            let log_r = log_ratio_pair(m.h0, [p.gamma(), p.phi], new, sigma2, tg);
            if accept(log_r, rng, &mut stats.gamma_phi) {
                p.phi = new[1];
                p.mu = new[0] / (1.0 - new[1]);
            }
        }
        None => stats.singular += 1,
    }
    update_sigma2(p, h, tg, rng, stats);
}

/// φ given γ, then γ given φ, then σ².
pub fn update_threeblock<R: Rng + ?Sized>(
    p: &mut Parameters,
    h: &[f64],
    tg: &Target,
    rng: &mut R,
    stats: &mut AcceptanceStats,
) {
    let m = LagMoments::from_path(h);
    let sigma2 = p.sigma2();

    let gamma = p.gamma();
    let (mean, var) = phi_proposal(&m, gamma, tg.aux);
    let z: f64 = rng.sample(StandardNormal);
    let phi = mean + (sigma2 * var).sqrt() * z;
    let log_r = log_ratio_pair(m.h0, [gamma, p.phi], [gamma, phi], sigma2, tg);
    if accept(log_r, rng, &mut stats.phi) {
        p.phi = phi;
        p.mu = gamma / (1.0 - phi);
    }

    let (mean, var) = gamma_proposal(&m, p.phi, tg.aux);
    let z: f64 = rng.sample(StandardNormal);
    let gamma_new = mean + (sigma2 * var).sqrt() * z;
    let log_r = log_ratio_pair(m.h0, [p.gamma(), p.phi], [gamma_new, p.phi], sigma2, tg);
    if accept(log_r, rng, &mut stats.gamma) {
        p.mu = gamma_new / (1.0 - p.phi);
    }

    update_sigma2(p, h, tg, rng, stats);
}

fn update_sigma2<R: Rng + ?Sized>(
    p: &mut Parameters,
    h: &[f64],
    tg: &Target,
    rng: &mut R,
    stats: &mut AcceptanceStats,
) {
    let periods = (h.len() - 1) as f64;
    let c_t = sigma2_scale(h, p.mu, p.phi);
    if !(c_t > 0.0 && c_t.is_finite()) {
        stats.singular += 1;
        return;
    }
    let new = inverse_gamma(0.5 * periods, c_t, rng);
    let log_r = log_ratio_sigma2(p.sigma2(), new, tg.priors.sigma2_scale);
    if accept(log_r, rng, &mut stats.sigma2) {
        p.sigma = new.sqrt();
    }
}
