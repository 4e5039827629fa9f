//! Scalar log-densities shared by the samplers and the prior.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub(crate) fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * d * d / var
}

/// log Beta(a, b) function.
pub(crate) fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Density of σ² ~ Gamma(1/2, rate 1/(2 scale)), i.e. σ² ~ scale · χ²₁.
#[inline]
pub(crate) fn ln_scaled_chisq1(sigma2: f64, scale: f64) -> f64 {
    if sigma2 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -0.5 * (2.0 * scale).ln() - 0.5 * PI.ln() - 0.5 * sigma2.ln() - sigma2 / (2.0 * scale)
}
