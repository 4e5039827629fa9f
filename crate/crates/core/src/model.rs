//! The vanilla stochastic volatility model.
//!
//! Centered form:
//!
//! ```text
//! y_t = exp(h_t / 2) ε_t
//! h_t = μ + φ (h_{t-1} - μ) + σ η_t,      h_0 ~ N(μ, σ² / (1 - φ²))
//! ```
//!
//! Non-centered form uses the standardized states `h̃_t = (h_t - μ) / σ`,
//! which follow a unit-variance AR(1) and move μ and σ into the observation
//! equation: `y_t ~ N(0, ω exp(σ h̃_t))` with `ω = exp(μ)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dens::{ln_beta_fn, ln_normal, ln_scaled_chisq1};
use crate::error::{Error, Result};

/// The parameter triple `(μ, φ, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Level of the log-variance.
    pub mu: f64,
    /// Persistence, `|φ| < 1`.
    pub phi: f64,
    /// Volatility of volatility, `σ > 0`.
    pub sigma: f64,
}

impl Parameters {
    pub fn new(mu: f64, phi: f64, sigma: f64) -> Result<Self> {
        let p = Parameters { mu, phi, sigma };
        if !p.is_valid() {
            return Err(Error::Domain(format!(
                "parameters out of range: mu={mu}, phi={phi}, sigma={sigma}"
            )));
        }
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        self.mu.is_finite()
            && self.phi.is_finite()
            && self.sigma.is_finite()
            && self.phi.abs() < 1.0
            && self.sigma > 0.0
    }

    /// Intercept of the AR(1) regression form, `γ = (1 - φ) μ`.
    pub fn gamma(&self) -> f64 {
        (1.0 - self.phi) * self.mu
    }

    /// Level on the variance scale, `ω = exp(μ)`.
    pub fn omega(&self) -> f64 {
        self.mu.exp()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Stationary variance of `h_t`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma2() / (1.0 - self.phi * self.phi)
    }
}

/// Independent priors on μ, φ and σ².
///
/// * `μ ~ N(mu_mean, mu_variance)`
/// * `(φ + 1) / 2 ~ Beta(phi_a, phi_b)`
/// * `σ² ~ sigma2_scale · χ²₁ = Gamma(1/2, 1 / (2 sigma2_scale))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Priors {
    pub mu_mean: f64,
    pub mu_variance: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub sigma2_scale: f64,
}

impl Default for Priors {
    /// The vague priors used for the exchange-rate fits.
    fn default() -> Self {
        Priors {
            mu_mean: -10.0,
            mu_variance: 100.0,
            phi_a: 20.0,
            phi_b: 1.5,
            sigma2_scale: 1.0,
        }
    }
}

impl Priors {
    /// Priors centered on the data-generating values, as used in the
    /// simulation study: `B_μ = 10`, `a0 = 40`, `b0 = 80 / (1 + φ) - 40`,
    /// `B_σ = σ²`.
    pub fn centered_on(truth: &Parameters) -> Self {
        Priors {
            mu_mean: truth.mu,
            mu_variance: 10.0,
            phi_a: 40.0,
            phi_b: 80.0 / (1.0 + truth.phi) - 40.0,
            sigma2_scale: truth.sigma2(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu_variance", self.mu_variance),
            ("phi_a", self.phi_a),
            ("phi_b", self.phi_b),
            ("sigma2_scale", self.sigma2_scale),
        ];
        if !self.mu_mean.is_finite() {
            return Err(Error::Config("mu_mean must be finite".into()));
        }
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn ln_prior_mu(&self, mu: f64) -> f64 {
        ln_normal(mu, self.mu_mean, self.mu_variance)
    }

    /// Transformed Beta density of φ on (−1, 1).
    pub fn ln_prior_phi(&self, phi: f64) -> f64 {
        if !(phi.abs() < 1.0) {
            return f64::NEG_INFINITY;
        }
        let up = 0.5 * (1.0 + phi);
        let down = 0.5 * (1.0 - phi);
        -std::f64::consts::LN_2 - ln_beta_fn(self.phi_a, self.phi_b)
            + (self.phi_a - 1.0) * up.ln()
            + (self.phi_b - 1.0) * down.ln()
    }

    /// Density of σ², as a density in σ².
    pub fn ln_prior_sigma2(&self, sigma2: f64) -> f64 {
        ln_scaled_chisq1(sigma2, self.sigma2_scale)
    }

    /// Conditional prior of γ = (1 − φ)μ given φ: `N(b_μ(1 − φ), B_μ(1 − φ)²)`.
    pub fn ln_prior_gamma_given_phi(&self, gamma: f64, phi: f64) -> f64 {
        let k = 1.0 - phi;
        ln_normal(gamma, self.mu_mean * k, self.mu_variance * k * k)
    }
}

/// `log p(μ) + log p(φ) + log p(σ²)`; `−∞` outside the support.
pub fn log_prior(p: &Parameters, priors: &Priors) -> Result<f64> {
    priors.validate()?;
    if !(p.phi.abs() < 1.0) || !(p.sigma > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(priors.ln_prior_mu(p.mu) + priors.ln_prior_phi(p.phi) + priors.ln_prior_sigma2(p.sigma2()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameterization {
    Centered,
    NonCentered,
}

/// Latent log-variance path `h_0 … h_T` (or its standardized version).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPath {
    pub states: Vec<f64>,
    pub parameterization: Parameterization,
}

impl LatentPath {
    pub fn new(states: Vec<f64>, parameterization: Parameterization) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Domain(
                "latent path needs at least two states".into(),
            ));
        }
        if states.iter().any(|h| !h.is_finite()) {
            return Err(Error::Domain(
                "latent path contains non-finite states".into(),
            ));
        }
        Ok(LatentPath {
            states,
            parameterization,
        })
    }

    /// Number of observation periods `T` (the path has `T + 1` states).
    pub fn periods(&self) -> usize {
        self.states.len() - 1
    }

    /// In-place version of [`transform_path`].
    pub fn reparameterize(&mut self, p: &Parameters, target: Parameterization) -> Result<()> {
        if !(p.sigma > 0.0) {
            return Err(Error::Domain(format!(
                "cannot reparameterize with sigma = {}",
                p.sigma
            )));
        }
        match (self.parameterization, target) {
            (Parameterization::Centered, Parameterization::NonCentered) => {
                let inv = 1.0 / p.sigma;
                for h in &mut self.states {
                    *h = (*h - p.mu) * inv;
                }
            }
            (Parameterization::NonCentered, Parameterization::Centered) => {
                for h in &mut self.states {
                    *h = p.mu + p.sigma * *h;
                }
            }
            _ => {}
        }
        self.parameterization = target;
        Ok(())
    }
}

/// Affine map between `h` and `h̃ = (h − μ)/σ`; a no-op when the tag already
/// matches `target`.
pub fn transform_path(
    path: &LatentPath,
    p: &Parameters,
    target: Parameterization,
) -> Result<LatentPath> {
    let mut out = path.clone();
    out.reparameterize(p, target)?;
    Ok(out)
}

/// Simulates `T` returns and the centered latent path `h_0 … h_T`.
///
/// Random numbers are consumed in the order `h_0`, then `(η_t, ε_t)` for
/// `t = 1 … T`.
pub fn simulate<R: Rng + ?Sized>(
    p: &Parameters,
    periods: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, LatentPath)> {
    if periods < 1 {
        return Err(Error::Domain("simulation needs T >= 1".into()));
    }
    if !p.is_valid() {
        return Err(Error::Domain(format!("invalid parameters {p:?}")));
    }
    let mut h = Vec::with_capacity(periods + 1);
    let mut y = Vec::with_capacity(periods);
    let z: f64 = rng.sample(StandardNormal);
    h.push(p.mu + p.stationary_variance().sqrt() * z);
    for t in 1..=periods {
        let eta: f64 = rng.sample(StandardNormal);
        let eps: f64 = rng.sample(StandardNormal);
        let ht = p.mu + p.phi * (h[t - 1] - p.mu) + p.sigma * eta;
        h.push(ht);
        y.push((0.5 * ht).exp() * eps);
    }
    Ok((
        y,
        LatentPath {
            states: h,
            parameterization: Parameterization::Centered,
        },
    ))
}

/// Returns together with their log-squared transform `ỹ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub y_tilde: Vec<f64>,
    pub offset: f64,
    pub demeaned: bool,
}

impl Dataset {
    /// Wraps an already linearized series (no returns attached).
    pub fn from_log_squared(y_tilde: Vec<f64>) -> Result<Self> {
        if y_tilde.is_empty() || y_tilde.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(
                "linearized series must be finite and non-empty".into(),
            ));
        }
        Ok(Dataset {
            y: Vec::new(),
            y_tilde,
            offset: 0.0,
            demeaned: false,
        })
    }

    pub fn len(&self) -> usize {
        self.y_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_tilde.is_empty()
    }
}

/// Offset `c` used when none is given: `1e-3` for de-meaned returns and
/// `1e-4` otherwise.
pub fn default_offset(demean: bool) -> f64 {
    if demean {
        1e-3
    } else {
        1e-4
    }
}

/// Offset scaled to the data, `1e-4 · mean((y_t − ȳ·[demean])²)`, falling
/// back to `1e-10` for a constant series. Small against typical squared
/// returns on any scale, so it only regularizes exact zeros.
pub fn relative_offset(y: &[f64], demean: bool) -> f64 {
    if y.is_empty() {
        return 1e-10;
    }
    let mean = if demean {
        y.iter().sum::<f64>() / y.len() as f64
    } else {
        0.0
    };
    let ms = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    if ms > 0.0 && ms.is_finite() {
        1e-4 * ms
    } else {
        1e-10
    }
}

/// `ỹ_t = log((y_t − ȳ·[demean])² + c)`.
pub fn linearize(y: &[f64], offset: Option<f64>, demean: bool) -> Result<Dataset> {
    let c = offset.unwrap_or_else(|| default_offset(demean));
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "offset must be finite and >= 0, got {c}"
        )));
    }
    if y.is_empty() {
        return Err(Error::Domain("empty return series".into()));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("return {i} is not finite")));
    }
    let mean = if demean {
        y.iter().sum::<f64>() / y.len() as f64
    } else {
        0.0
    };
    let mut y_tilde = Vec::with_capacity(y.len());
    for (i, &v) in y.iter().enumerate() {
        let d = v - mean;
        let lt = (d * d + c).ln();
        if !lt.is_finite() {
            return Err(Error::Domain(format!(
                "log-squared return at index {i} is not finite (zero return with offset 0)"
            )));
        }
        y_tilde.push(lt);
    }
    Ok(Dataset {
        y: y.to_vec(),
        y_tilde,
        offset: c,
        demeaned: demean,
    })
}
