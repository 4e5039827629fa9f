//! Conditionally Gaussian latent state draw.
//!
//! Given the indicators, `ỹ_t = m_{r_t} + h_t + N(0, s²_{r_t})`, so the joint
//! conditional of `h_1 … h_T` (with `h_0` integrated out) is Gaussian with a
//! tridiagonal precision matrix. `h_0` then follows from `h_1`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bandlinalg::{AwolWorkspace, SymTridiag};
use crate::error::{Error, Result};
use crate::mixture::{MixtureState, MixtureTable};
use crate::model::{Dataset, LatentPath, Parameterization, Parameters};

fn check_dims(data: &Dataset, mix: &MixtureState) -> Result<usize> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Domain("latent draw needs T >= 2".into()));
    }
    if mix.len() != n {
        return Err(Error::Domain(format!(
            "indicator length {} differs from data length {n}",
            mix.len()
        )));
    }
    Ok(n)
}

/// Precision matrix and canonical vector of `h_1 … h_T` in the centered
/// parameterization.
pub fn build_band_system_centered(
    data: &Dataset,
    mix: &MixtureState,
    p: &Parameters,
    table: &MixtureTable,
) -> Result<(SymTridiag, Vec<f64>)> {
    let n = check_dims(data, mix)?;
    let mut omega = SymTridiag::with_size(n);
    let mut c = vec![0.0; n];
    fill_centered(data, mix, p, table, &mut omega, &mut c);
    Ok((omega, c))
}

/// Precision matrix and canonical vector of `h̃_1 … h̃_T` in the non-centered
/// parameterization.
pub fn build_band_system_noncentered(
    data: &Dataset,
    mix: &MixtureState,
    p: &Parameters,
    table: &MixtureTable,
) -> Result<(SymTridiag, Vec<f64>)> {
    let n = check_dims(data, mix)?;
    let mut omega = SymTridiag::with_size(n);
    let mut c = vec![0.0; n];
    fill_noncentered(data, mix, p, table, &mut omega, &mut c);
    Ok((omega, c))
}

pub(crate) fn fill_centered(
    data: &Dataset,
    mix: &MixtureState,
    p: &Parameters,
    table: &MixtureTable,
    omega: &mut SymTridiag,
    c: &mut [f64],
) {
    let n = data.len();
    let inv_s2 = 1.0 / p.sigma2();
    let one_minus = 1.0 - p.phi;
    let interior_diag = (1.0 + p.phi * p.phi) * inv_s2;
    let interior_rhs = p.mu * one_minus * one_minus * inv_s2;
    let end_rhs = p.mu * one_minus * inv_s2;
    let off = -p.phi * inv_s2;
    for t in 0..n {
        let r = mix.indicators[t];
        let prec = table.inv_variance(r);
        let obs = prec * (data.y_tilde[t] - table.mean(r));
        let (d, b) = if t == 0 || t == n - 1 {
            (inv_s2, end_rhs)
        } else {
            (interior_diag, interior_rhs)
        };
        omega.diag[t] = prec + d;
        c[t] = obs + b;
    }
    omega.offdiag.iter_mut().for_each(|o| *o = off);
}

pub(crate) fn fill_noncentered(
    data: &Dataset,
    mix: &MixtureState,
    p: &Parameters,
    table: &MixtureTable,
    omega: &mut SymTridiag,
    c: &mut [f64],
) {
    let n = data.len();
    let s2 = p.sigma * p.sigma;
    let interior = 1.0 + p.phi * p.phi;
    for t in 0..n {
        let r = mix.indicators[t];
        let prec = table.inv_variance(r);
        let prior = if t == 0 || t == n - 1 { 1.0 } else { interior };
        omega.diag[t] = s2 * prec + prior;
        c[t] = p.sigma * prec * (data.y_tilde[t] - table.mean(r) - p.mu);
    }
    omega.offdiag.iter_mut().for_each(|o| *o = -p.phi);
}

/// Scratch buffers for repeated latent draws of one series length.
#[derive(Debug, Clone)]
pub struct LatentWorkspace {
    omega: SymTridiag,
    rhs: Vec<f64>,
    out: Vec<f64>,
    awol: AwolWorkspace,
}

impl LatentWorkspace {
    pub fn new(periods: usize) -> Self {
        LatentWorkspace {
            omega: SymTridiag::with_size(periods),
            rhs: vec![0.0; periods],
            out: vec![0.0; periods],
            awol: AwolWorkspace::with_size(periods),
        }
    }
}

/// Replaces `path.states[1..]` by one joint draw and then draws the initial
/// state from `h_0 | h_1` (`N(μ + φ(h_1 − μ), σ²)` centered, `N(φ h̃_1, 1)`
/// non-centered), in the parameterization the path is tagged with.
pub fn draw_latent<R: Rng + ?Sized>(
    path: &mut LatentPath,
    p: &Parameters,
    mix: &MixtureState,
    data: &Dataset,
    table: &MixtureTable,
    ws: &mut LatentWorkspace,
    rng: &mut R,
) -> Result<()> {
    let n = check_dims(data, mix)?;
    if path.states.len() != n + 1 {
        return Err(Error::Domain(format!(
            "path has {} states, expected {}",
            path.states.len(),
            n + 1
        )));
    }
    if ws.rhs.len() != n {
        *ws = LatentWorkspace::new(n);
    }
    match path.parameterization {
        Parameterization::Centered => {
            fill_centered(data, mix, p, table, &mut ws.omega, &mut ws.rhs)
        }
        Parameterization::NonCentered => {
            fill_noncentered(data, mix, p, table, &mut ws.omega, &mut ws.rhs)
        }
    }
    ws.awol.draw(&ws.omega, &ws.rhs, rng, &mut ws.out)?;
    path.states[1..].copy_from_slice(&ws.out);
    let z: f64 = rng.sample(StandardNormal);
    let h1 = path.states[1];
    path.states[0] = match path.parameterization {
        Parameterization::Centered => p.mu + p.phi * (h1 - p.mu) + p.sigma * z,
        Parameterization::NonCentered => p.phi * h1 + z,
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;
    use approx::assert_relative_eq;

    fn table_unit() -> MixtureTable {
        let mut w = [0.0; 10];
        w[0] = 1.0;
        MixtureTable::new(w, [0.0; 10], [1.0; 10]).unwrap()
    }

    #[test]
    fn centered_decouples_without_persistence() {
        let data = Dataset::from_log_squared(vec![0.0, 0.0]).unwrap();
        let mix = MixtureState::constant(2, 0);
        let p = Parameters::new(0.0, 0.0, 1.0).unwrap();
        let (o, c) = build_band_system_centered(&data, &mix, &p, &table_unit()).unwrap();
        assert_eq!(o.diag, vec![2.0, 2.0]);
        assert_eq!(o.offdiag, vec![0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn centered_generic_entries() {
        let table = MixtureTable::omori();
        let data = Dataset::from_log_squared(vec![-9.0, -11.5, -10.2]).unwrap();
        let mix = MixtureState {
            indicators: vec![2, 5, 8],
        };
        let p = Parameters::new(-10.0, 0.9, 0.3).unwrap();
        let (o, c) = build_band_system_centered(&data, &mix, &p, &table).unwrap();
        let s2 = [0.26768, 0.98583, 4.16591];
        let m = [0.73504, -1.97278, -8.68384];
        let sig2 = 0.09;
        assert_relative_eq!(o.diag[0], 1.0 / s2[0] + 1.0 / sig2, epsilon = 1e-14);
        assert_relative_eq!(
            o.diag[1],
            1.0 / s2[1] + (1.0 + 0.81) / sig2,
            epsilon = 1e-13
        );
        assert_relative_eq!(o.diag[2], 1.0 / s2[2] + 1.0 / sig2, epsilon = 1e-14);
        assert_relative_eq!(o.offdiag[0], -0.9 / sig2, epsilon = 1e-14);
        assert_relative_eq!(o.offdiag[1], -0.9 / sig2, epsilon = 1e-14);
        assert_relative_eq!(
            c[0],
            (-9.0 - m[0]) / s2[0] + -10.0 * 0.1 / sig2,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            c[1],
            (-11.5 - m[1]) / s2[1] + -10.0 * 0.01 / sig2,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            c[2],
            (-10.2 - m[2]) / s2[2] + -10.0 * 0.1 / sig2,
            epsilon = 1e-13
        );
        // Endpoints lack the φ²/σ² term of the interior.
        assert!(o.diag[1] - 1.0 / s2[1] > o.diag[0] - 1.0 / s2[0]);
    }

    #[test]
    fn noncentered_entries() {
        let table = MixtureTable::omori();
        let data = Dataset::from_log_squared(vec![-9.0, -11.5, -10.2]).unwrap();
        let mix = MixtureState {
            indicators: vec![2, 5, 8],
        };
        let p = Parameters::new(-10.0, 0.9, 0.3).unwrap();
        let (o, c) = build_band_system_noncentered(&data, &mix, &p, &table).unwrap();
        assert_relative_eq!(o.diag[0], 0.09 / 0.26768 + 1.0, epsilon = 1e-14);
        assert_relative_eq!(o.diag[1], 0.09 / 0.98583 + 1.81, epsilon = 1e-14);
        assert_relative_eq!(o.diag[2], 0.09 / 4.16591 + 1.0, epsilon = 1e-14);
        assert_eq!(o.offdiag, vec![-0.9, -0.9]);
        assert_relative_eq!(
            c[1],
            0.3 / 0.98583 * (-11.5 + 1.97278 + 10.0),
            epsilon = 1e-14
        );

        // σ = 0: only the AR(1) prior precision remains.
        let flat = Parameters {
            mu: -10.0,
            phi: 0.9,
            sigma: 0.0,
        };
        let (o, c) = build_band_system_noncentered(&data, &mix, &flat, &table).unwrap();
        assert_eq!(o.diag, vec![1.0, 1.81, 1.0]);
        assert_eq!(c, vec![0.0; 3]);

        let unit = Parameters::new(0.0, 0.0, 1.0).unwrap();
        let data0 = Dataset::from_log_squared(vec![0.0; 3]).unwrap();
        let (o, _) = build_band_system_noncentered(
            &data0,
            &MixtureState::constant(3, 0),
            &unit,
            &table_unit(),
        )
        .unwrap();
        assert_eq!(o.diag, vec![2.0, 2.0, 2.0]);
        assert_eq!(o.offdiag, vec![0.0, 0.0]);
    }

    #[test]
    fn noncentered_prior_draw_is_ar1() {
        let n = 10_000;
        let data = Dataset::from_log_squared(vec![-1.0; n]).unwrap();
        let mix = MixtureState::constant(n, 4);
        let p = Parameters {
            mu: 0.0,
            phi: 0.8,
            sigma: 0.0,
        };
        let mut path = LatentPath {
            states: vec![0.0; n + 1],
            parameterization: Parameterization::NonCentered,
        };
        let mut ws = LatentWorkspace::new(n);
        let mut rng = stream_from_seed(21);
        draw_latent(
            &mut path,
            &p,
            &mix,
            &data,
            &MixtureTable::omori(),
            &mut ws,
            &mut rng,
        )
        .unwrap();
        let h = &path.states;
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        let num: f64 = h.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let den: f64 = h.iter().map(|v| (v - mean).powi(2)).sum();
        let se = ((1.0 - 0.64) / n as f64).sqrt();
        assert!((num / den - 0.8).abs() < 4.0 * se);
    }

    #[test]
    fn initial_state_without_persistence_ignores_h1() {
        // φ = 0: h_0 | h_1 ~ N(μ, σ²) for any h_1.
        let n = 4;
        let table = MixtureTable::omori();
        let data = Dataset::from_log_squared(vec![-3.0; n]).unwrap();
        let mix = MixtureState::constant(n, 4);
        let p = Parameters::new(-2.0, 0.0, 0.5).unwrap();
        let mut ws = LatentWorkspace::new(n);
        let mut rng = stream_from_seed(2);
        let reps = 20_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut path = LatentPath {
            states: vec![0.0; n + 1],
            parameterization: Parameterization::Centered,
        };
        for _ in 0..reps {
            draw_latent(&mut path, &p, &mix, &data, &table, &mut ws, &mut rng).unwrap();
            sum += path.states[0];
            sum2 += path.states[0] * path.states[0];
        }
        let mean = sum / reps as f64;
        let var = sum2 / reps as f64 - mean * mean;
        assert!((mean + 2.0).abs() < 4.0 * 0.5 / (reps as f64).sqrt());
        assert!((var - 0.25).abs() < 4.0 * 0.25 * (2.0 / reps as f64).sqrt());
    }
}
