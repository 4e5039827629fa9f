//! Symmetric tridiagonal Cholesky factorization and the band solves behind
//! the one-shot latent state draw.
//!
//! For a precision matrix `Ω = L Lᵀ` and canonical vector `c`, a draw from
//! `N(Ω⁻¹c, Ω⁻¹)` is `h = L⁻ᵀ(L⁻¹c + ε)` with `ε ~ N(0, I)`. Both solves are
//! bidiagonal, so the whole draw is `O(n)` and never forms `Ω⁻¹`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::Domain(format!(
                "tridiagonal shape mismatch: diag {} offdiag {}",
                diag.len(),
                offdiag.len()
            )));
        }
        Ok(SymTridiag { diag, offdiag })
    }

    pub fn with_size(n: usize) -> Self {
        SymTridiag {
            diag: vec![0.0; n],
            offdiag: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `Ω x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.offdiag[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Lower bidiagonal Cholesky factor `L` of a [`SymTridiag`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BandCholesky {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl BandCholesky {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `L Lᵀ` as a tridiagonal matrix.
    pub fn reconstruct(&self) -> SymTridiag {
        let n = self.len();
        let mut diag = Vec::with_capacity(n);
        let mut offdiag = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut d = self.diag[i] * self.diag[i];
            if i > 0 {
                d += self.offdiag[i - 1] * self.offdiag[i - 1];
                offdiag.push(self.offdiag[i - 1] * self.diag[i - 1]);
            }
            diag.push(d);
        }
        SymTridiag { diag, offdiag }
    }
}

/// Factorizes `m = L Lᵀ`.
pub fn cholesky(m: &SymTridiag) -> Result<BandCholesky> {
    let mut out = BandCholesky::default();
    cholesky_into(m, &mut out)?;
    Ok(out)
}

/// Like [`cholesky`] but reuses the buffers in `out`.
pub fn cholesky_into(m: &SymTridiag, out: &mut BandCholesky) -> Result<()> {
    let n = m.len();
    if n == 0 || m.offdiag.len() + 1 != n {
        return Err(Error::Domain(
            "tridiagonal matrix has inconsistent shape".into(),
        ));
    }
    out.diag.resize(n, 0.0);
    out.offdiag.resize(n - 1, 0.0);
    let mut pivot = m.diag[0];
    if !(pivot > 0.0) {
        return Err(Error::NotPositiveDefinite { index: 0 });
    }
    out.diag[0] = pivot.sqrt();
    for i in 1..n {
        let l = m.offdiag[i - 1] / out.diag[i - 1];
        out.offdiag[i - 1] = l;
        pivot = m.diag[i] - l * l;
        if !(pivot > 0.0) {
            return Err(Error::NotPositiveDefinite { index: i });
        }
        out.diag[i] = pivot.sqrt();
    }
    Ok(())
}

fn check_len(f: &BandCholesky, rhs: &[f64]) -> Result<()> {
    if f.len() != rhs.len() {
        return Err(Error::Domain(format!(
            "length mismatch: factor {} rhs {}",
            f.len(),
            rhs.len()
        )));
    }
    Ok(())
}

/// Solves `L a = rhs` in place.
pub fn solve_lower_in_place(f: &BandCholesky, x: &mut [f64]) -> Result<()> {
    check_len(f, x)?;
    let n = x.len();
    if n == 0 {
        return Ok(());
    }
    x[0] /= f.diag[0];
    for i in 1..n {
        x[i] = (x[i] - f.offdiag[i - 1] * x[i - 1]) / f.diag[i];
    }
    Ok(())
}

/// Solves `Lᵀ h = rhs` in place.
pub fn solve_upper_in_place(f: &BandCholesky, x: &mut [f64]) -> Result<()> {
    check_len(f, x)?;
    let n = x.len();
    if n == 0 {
        return Ok(());
    }
    x[n - 1] /= f.diag[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (x[i] - f.offdiag[i] * x[i + 1]) / f.diag[i];
    }
    Ok(())
}

pub fn solve_lower(f: &BandCholesky, rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = rhs.to_vec();
    solve_lower_in_place(f, &mut x)?;
    Ok(x)
}

pub fn solve_upper(f: &BandCholesky, rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = rhs.to_vec();
    solve_upper_in_place(f, &mut x)?;
    Ok(x)
}

/// Draws from `N(Ω⁻¹c, Ω⁻¹)`.
pub fn awol_draw<R: Rng + ?Sized>(m: &SymTridiag, c: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut ws = AwolWorkspace::default();
    let mut out = vec![0.0; c.len()];
    ws.draw(m, c, rng, &mut out)?;
    Ok(out)
}

/// The same map as [`awol_draw`] with the standard normal vector supplied by
/// the caller.
pub fn awol_draw_with_noise(m: &SymTridiag, c: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
    if noise.len() != c.len() {
        return Err(Error::Domain("noise length differs from rhs length".into()));
    }
    let f = cholesky(m)?;
    let mut x = solve_lower(&f, c)?;
    for (xi, e) in x.iter_mut().zip(noise) {
        *xi += e;
    }
    solve_upper_in_place(&f, &mut x)?;
    Ok(x)
}

/// Reusable factor storage for repeated draws of the same dimension.
#[derive(Debug, Clone, Default)]
pub struct AwolWorkspace {
    factor: BandCholesky,
}

impl AwolWorkspace {
    pub fn with_size(n: usize) -> Self {
        AwolWorkspace {
            factor: BandCholesky {
                diag: vec![0.0; n],
                offdiag: vec![0.0; n.saturating_sub(1)],
            },
        }
    }

    /// Writes one draw into `out`. Noise is consumed one standard normal per
    /// component in index order.
    pub fn draw<R: Rng + ?Sized>(
        &mut self,
        m: &SymTridiag,
        c: &[f64],
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        if c.len() != m.len() || out.len() != m.len() {
            return Err(Error::Domain("awol draw: dimension mismatch".into()));
        }
        cholesky_into(m, &mut self.factor)?;
        out.copy_from_slice(c);
        solve_lower_in_place(&self.factor, out)?;
        for x in out.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *x += e;
        }
        solve_upper_in_place(&self.factor, out)
    }

    pub fn factor(&self) -> &BandCholesky {
        &self.factor
    }
}
