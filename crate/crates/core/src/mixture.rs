//! Ten-component normal mixture approximation of the log χ²₁ distribution
//! and the conditional update of the component indicators.
//!
//! Constants are those of Omori, Chib, Shephard and Nakajima (2007),
//! Journal of Econometrics 140, Table 1, for `log ε²` with `ε ~ N(0, 1)`.

use rand::Rng;

use crate::dens::LN_SQRT_2PI;
use crate::error::{Error, Result};

pub const COMPONENTS: usize = 10;

const OMORI_WEIGHTS: [f64; COMPONENTS] = [
    0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115,
];
const OMORI_MEANS: [f64; COMPONENTS] = [
    1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000,
];
const OMORI_VARIANCES: [f64; COMPONENTS] = [
    0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342,
];

/// Mixture weights, component means `m_k` and variances `s²_k`, plus the
/// per-component constants the indicator update needs.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTable {
    weights: [f64; COMPONENTS],
    means: [f64; COMPONENTS],
    variances: [f64; COMPONENTS],
    inv_variances: [f64; COMPONENTS],
    // log w_k − log s_k
    log_norm: [f64; COMPONENTS],
}

impl MixtureTable {
    pub fn new(
        weights: [f64; COMPONENTS],
        means: [f64; COMPONENTS],
        variances: [f64; COMPONENTS],
    ) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config("mixture weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        if variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("mixture variances must be positive".into()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("mixture means must be finite".into()));
        }
        let mut inv_variances = [0.0; COMPONENTS];
        let mut log_norm = [0.0; COMPONENTS];
        for k in 0..COMPONENTS {
            inv_variances[k] = 1.0 / variances[k];
            log_norm[k] = weights[k].ln() - 0.5 * variances[k].ln();
        }
        Ok(MixtureTable {
            weights,
            means,
            variances,
            inv_variances,
            log_norm,
        })
    }

    /// The canonical ten-component table.
    pub fn omori() -> Self {
        Self::new(OMORI_WEIGHTS, OMORI_MEANS, OMORI_VARIANCES).expect("canonical table is valid")
    }

    pub fn weights(&self) -> &[f64; COMPONENTS] {
        &self.weights
    }

    pub fn means(&self) -> &[f64; COMPONENTS] {
        &self.means
    }

    pub fn variances(&self) -> &[f64; COMPONENTS] {
        &self.variances
    }

    #[inline]
    pub fn mean(&self, k: u8) -> f64 {
        self.means[k as usize]
    }

    #[inline]
    pub fn variance(&self, k: u8) -> f64 {
        self.variances[k as usize]
    }

    #[inline]
    pub fn inv_variance(&self, k: u8) -> f64 {
        self.inv_variances[k as usize]
    }

    pub fn mixture_mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum()
    }

    pub fn mixture_variance(&self) -> f64 {
        let mean = self.mixture_mean();
        self.weights
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(w, (m, v))| w * (v + (m - mean) * (m - mean)))
            .sum()
    }

    /// Index of the largest weight (lowest index on ties).
    pub fn highest_weight_component(&self) -> u8 {
        let mut best = 0;
        for k in 1..COMPONENTS {
            if self.weights[k] > self.weights[best] {
                best = k;
            }
        }
        best as u8
    }

    /// A copy with every component mean moved by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut means = self.means;
        for m in &mut means {
            *m += delta;
        }
        Self::new(self.weights, means, self.variances).expect("shift keeps table valid")
    }

    #[inline]
    fn log_kernels(&self, residual: f64, out: &mut [f64; COMPONENTS]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for k in 0..COMPONENTS {
            let d = residual - self.means[k];
            let l = self.log_norm[k] - 0.5 * d * d * self.inv_variances[k];
            out[k] = l;
            if l > max {
                max = l;
            }
        }
        max
    }

    /// Normalized `P(r_t = k | ε*_t)` for all ten components.
    pub fn posterior_probabilities(&self, residual: f64) -> [f64; COMPONENTS] {
        let mut p = [0.0; COMPONENTS];
        let max = self.log_kernels(residual, &mut p);
        let mut total = 0.0;
        for v in &mut p {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in &mut p {
            *v /= total;
        }
        p
    }
}

impl Default for MixtureTable {
    fn default() -> Self {
        Self::omori()
    }
}

/// Component indicators `r_1 … r_T`, stored zero-based (`0..10`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureState {
    pub indicators: Vec<u8>,
}

impl MixtureState {
    pub fn constant(periods: usize, component: u8) -> Self {
        MixtureState {
            indicators: vec![component; periods],
        }
    }

    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }
}

/// Draws every indicator from its normalized ten-point posterior given the
/// residual `ε*_t`, one uniform per time point, in time order.
pub fn sample_indicators<R: Rng + ?Sized>(
    residuals: &[f64],
    table: &MixtureTable,
    rng: &mut R,
) -> MixtureState {
    let mut state = MixtureState::constant(residuals.len(), 0);
    sample_indicators_into(residuals, table, rng, &mut state.indicators);
    state
}

/// Allocation-free form of [`sample_indicators`].
pub fn sample_indicators_into<R: Rng + ?Sized>(
    residuals: &[f64],
    table: &MixtureTable,
    rng: &mut R,
    out: &mut [u8],
) {
    debug_assert_eq!(residuals.len(), out.len());
    let mut cum = [0.0; COMPONENTS];
    for (r, &e) in out.iter_mut().zip(residuals) {
        let max = table.log_kernels(e, &mut cum);
        let mut acc = 0.0;
        for v in &mut cum {
            acc += (*v - max).exp();
            *v = acc;
        }
        let u = rng.random::<f64>() * acc;
        let mut k = 0;
        while k < COMPONENTS - 1 && !(u < cum[k]) {
            k += 1;
        }
        *r = k as u8;
    }
}

/// `log Σ_k w_k N(x; m_k, s²_k)`.
pub fn mixture_logdensity(x: f64, table: &MixtureTable) -> f64 {
    let mut l = [0.0; COMPONENTS];
    let max = table.log_kernels(x, &mut l);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = l.iter().map(|v| (v - max).exp()).sum();
    max + s.ln() - LN_SQRT_2PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;
    use approx::assert_relative_eq;

    #[test]
    fn table_moments() {
        let t = MixtureTable::omori();
        let total: f64 = t.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert!((t.mixture_mean() - (-1.2704)).abs() < 1e-2);
        let half_pi2 = std::f64::consts::PI.powi(2) / 2.0;
        assert!((t.mixture_variance() - half_pi2).abs() < 5e-2);
        assert_eq!(t.highest_weight_component(), 4);
    }

    #[test]
    fn invalid_tables_rejected() {
        let mut w = OMORI_WEIGHTS;
        w[0] += 0.1;
        assert!(MixtureTable::new(w, OMORI_MEANS, OMORI_VARIANCES).is_err());
        let mut v = OMORI_VARIANCES;
        v[3] = 0.0;
        assert!(MixtureTable::new(OMORI_WEIGHTS, OMORI_MEANS, v).is_err());
    }

    fn one_hot(k: usize) -> [f64; COMPONENTS] {
        let mut w = [0.0; COMPONENTS];
        w[k] = 1.0;
        w
    }

    #[test]
    fn degenerate_table_pins_indicators() {
        let t = MixtureTable::new(one_hot(6), OMORI_MEANS, OMORI_VARIANCES).unwrap();
        let res: Vec<f64> = (0..200).map(|i| i as f64 * 0.1 - 10.0).collect();
        let s = sample_indicators(&res, &t, &mut stream_from_seed(1));
        assert!(s.indicators.iter().all(|&r| r == 6));
    }

    #[test]
    fn sharp_component_dominates() {
        let mut v = [4.0; COMPONENTS];
        v[3] = 1e-8;
        let means: [f64; COMPONENTS] = std::array::from_fn(|k| k as f64);
        let t = MixtureTable::new([0.1; COMPONENTS], means, v).unwrap();
        let p = t.posterior_probabilities(3.0);
        assert!(p[3] > 0.999);
        let res = vec![3.0; 10_000];
        let s = sample_indicators(&res, &t, &mut stream_from_seed(4));
        let hits = s.indicators.iter().filter(|&&r| r == 3).count();
        assert!(hits as f64 / 1e4 > 0.99);
    }

    #[test]
    fn probabilities_are_normalized() {
        let t = MixtureTable::omori();
        for e in [-30.0, -5.0, -1.27, 0.0, 2.5, 10.0] {
            let p = t.posterior_probabilities(e);
            let s: f64 = p.iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn frequencies_match_enumerated_posterior() {
        let t = MixtureTable::omori();
        let e = -2.3;
        // Brute-force oracle: evaluate the ten unnormalized weights directly.
        let raw: Vec<f64> = (0..COMPONENTS)
            .map(|k| {
                let (w, m, v) = (OMORI_WEIGHTS[k], OMORI_MEANS[k], OMORI_VARIANCES[k]);
                w / v.sqrt() * (-(e - m) * (e - m) / (2.0 * v)).exp()
            })
            .collect();
        let z: f64 = raw.iter().sum();
        let n = 100_000;
        let s = sample_indicators(&vec![e; n], &t, &mut stream_from_seed(77));
        let mut counts = [0usize; COMPONENTS];
        for &r in &s.indicators {
            counts[r as usize] += 1;
        }
        for k in 0..COMPONENTS {
            let p = raw[k] / z;
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
            let f = counts[k] as f64 / n as f64;
            assert!(
                (f - p).abs() <= 4.0 * se + 1e-12,
                "component {k}: {f} vs {p}"
            );
        }
    }

    #[test]
    fn shift_invariance_of_indicator_draws() {
        let t = MixtureTable::omori();
        let shifted = t.shifted(700.0);
        let mut rng = stream_from_seed(3);
        let res: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let res_shift: Vec<f64> = res.iter().map(|e| e + 700.0).collect();
        let a = sample_indicators(&res, &t, &mut stream_from_seed(10));
        let b = sample_indicators(&res_shift, &shifted, &mut stream_from_seed(10));
        assert_eq!(a, b);
    }

    #[test]
    fn single_component_logdensity() {
        let mut v = [1.0; COMPONENTS];
        v[0] = 1.0;
        let t = MixtureTable::new(one_hot(0), [0.0; COMPONENTS], v).unwrap();
        assert_relative_eq!(
            mixture_logdensity(0.0, &t),
            -(2.0 * std::f64::consts::PI).sqrt().ln(),
            epsilon = 1e-14
        );
    }
}
