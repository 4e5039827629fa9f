//! Joint-distribution ("getting it right") check of a full sampler.
//!
//! Two simulators of `p(θ, h, r, ỹ)` are compared: independent draws from
//! the prior (marginal-conditional) and a chain that alternates one sampler
//! sweep given `ỹ` with a fresh draw of `ỹ` given `(θ, h, r)`
//! (successive-conditional). Any error in a transition kernel shows up as a
//! difference in the expectations of simple test functions.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::inefficiency_factor;
use crate::error::{Error, Result};
use crate::mixture::{MixtureState, MixtureTable};
use crate::model::{Dataset, LatentPath, Parameterization, Parameters, Priors};
use crate::rng::RandomStream;
use crate::samplers::{AcceptanceStats, Blocking, ChainState, Sampler, SamplerConfig, Scheme};

pub const TEST_FUNCTIONS: [&str; 8] = [
    "mu", "mu^2", "phi", "phi^2", "sigma^2", "sigma^4", "mean(h)", "var(h)",
];

type Row = [f64; 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GewekeConfig {
    pub scheme: Scheme,
    pub periods: usize,
    pub priors: Priors,
    pub draws: usize,
    /// Successive-conditional sweeps discarded before recording.
    pub burnin: usize,
    pub gis_blocking: Blocking,
    #[serde(skip)]
    pub drop_initial_state_factor: bool,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        GewekeConfig {
            scheme: Scheme::GisC,
            periods: 50,
            priors: geweke_priors(),
            draws: 200_000,
            burnin: 1_000,
            gis_blocking: Blocking::Two,
            drop_initial_state_factor: false,
        }
    }
}

/// Priors used by default: proper, informative enough that every scheme
/// mixes over the whole prior at `T = 50`.
pub fn geweke_priors() -> Priors {
    Priors {
        mu_mean: 0.0,
        mu_variance: 1.0,
        phi_a: 10.0,
        phi_b: 1.5,
        sigma2_scale: 0.1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeStat {
    pub name: String,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Inefficiency factor used for the second sample's standard error.
    pub if_b: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeReport {
    pub scheme: Scheme,
    pub periods: usize,
    pub draws: usize,
    pub stats: Vec<GewekeStat>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.stats.iter().fold(0.0, |m, s| m.max(s.z.abs()))
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.max_abs_z() < threshold
    }
}

pub fn test_functions(p: &Parameters, h: &[f64]) -> Row {
    let n = h.len() as f64;
    let mean = h.iter().sum::<f64>() / n;
    let var = h.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let s2 = p.sigma2();
    [
        p.mu,
        p.mu * p.mu,
        p.phi,
        p.phi * p.phi,
        s2,
        s2 * s2,
        mean,
        var,
    ]
}

/// One draw of `(μ, φ, σ)` from the prior.
pub fn prior_draw<R: Rng + ?Sized>(priors: &Priors, rng: &mut R) -> Parameters {
    let beta = Beta::new(priors.phi_a, priors.phi_b).expect("validated priors");
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let mu = priors.mu_mean + priors.mu_variance.sqrt() * z;
        let phi = 2.0 * beta.sample(rng) - 1.0;
        let z: f64 = rng.sample(StandardNormal);
        let p = Parameters {
            mu,
            phi,
            sigma: priors.sigma2_scale.sqrt() * z.abs(),
        };
        if p.is_valid() {
            return p;
        }
    }
}

fn ar_path<R: Rng + ?Sized>(p: &Parameters, periods: usize, rng: &mut R) -> Vec<f64> {
    let mut h = Vec::with_capacity(periods + 1);
    let z: f64 = rng.sample(StandardNormal);
    h.push(p.mu + p.stationary_variance().sqrt() * z);
    for t in 1..=periods {
        let z: f64 = rng.sample(StandardNormal);
        h.push(p.mu + p.phi * (h[t - 1] - p.mu) + p.sigma * z);
    }
    h
}

fn prior_indicators<R: Rng + ?Sized>(table: &MixtureTable, periods: usize, rng: &mut R) -> Vec<u8> {
    let w = table.weights();
    (0..periods)
        .map(|_| {
            let u = rng.random::<f64>();
            let mut acc = 0.0;
            let mut k = 0;
            while k < w.len() - 1 {
                acc += w[k];
                if u < acc {
                    break;
                }
                k += 1;
            }
            k as u8
        })
        .collect()
}

fn regenerate<R: Rng + ?Sized>(
    y: &mut [f64],
    h: &[f64],
    mix: &MixtureState,
    table: &MixtureTable,
    rng: &mut R,
) {
    for ((yt, &ht), &r) in y.iter_mut().zip(&h[1..]).zip(&mix.indicators) {
        let z: f64 = rng.sample(StandardNormal);
        *yt = ht + table.mean(r) + table.variance(r).sqrt() * z;
    }
}

/// Independent draws of the test functions under the prior.
pub fn marginal_conditional<R: Rng + ?Sized>(
    priors: &Priors,
    periods: usize,
    draws: usize,
    rng: &mut R,
) -> Vec<Row> {
    (0..draws)
        .map(|_| {
            let p = prior_draw(priors, rng);
            test_functions(&p, &ar_path(&p, periods, rng))
        })
        .collect()
}

/// Test functions along the successive-conditional chain.
pub fn successive_conditional(cfg: &GewekeConfig, rng: RandomStream) -> Result<Vec<Row>> {
    cfg.priors.validate()?;
    if cfg.periods < 2 {
        return Err(Error::Config("geweke test needs T >= 2".into()));
    }
    let table = MixtureTable::omori();
    let mut sc = SamplerConfig::new(cfg.scheme, 0, 1);
    sc.gis_blocking = cfg.gis_blocking;
    sc.drop_initial_state_factor = cfg.drop_initial_state_factor;
    let mut sampler = Sampler::new(cfg.priors, sc, table.clone())?;

    let mut state = ChainState::initial(
        cfg.periods,
        Parameters::new(0.0, 0.5, 1.0)?,
        cfg.scheme,
        &table,
        rng,
    )?;
    let p = prior_draw(&cfg.priors, &mut state.rng);
    let h = ar_path(&p, cfg.periods, &mut state.rng);
    let mix = MixtureState {
        indicators: prior_indicators(&table, cfg.periods, &mut state.rng),
    };
    let mut data = Dataset::from_log_squared(vec![0.0; cfg.periods])?;
    regenerate(&mut data.y_tilde, &h, &mix, &table, &mut state.rng);
    let mut path = LatentPath {
        states: h,
        parameterization: Parameterization::Centered,
    };
    path.reparameterize(&p, cfg.scheme.baseline())?;
    state.params = p;
    state.path = path;
    state.mix = mix;

    let mut stats = AcceptanceStats::default();
    let mut rows = Vec::with_capacity(cfg.draws);
    let mut h = vec![0.0; cfg.periods + 1];
    for it in 0..cfg.burnin + cfg.draws {
        sampler
            .step(&data, &mut state, &mut stats)
            .map_err(|e| Error::Chain {
                iteration: it,
                source: Box::new(e),
            })?;
        let p = state.params;
        match state.path.parameterization {
            Parameterization::Centered => h.copy_from_slice(&state.path.states),
            Parameterization::NonCentered => {
                for (c, z) in h.iter_mut().zip(&state.path.states) {
                    *c = p.mu + p.sigma * z;
                }
            }
        }
        if it >= cfg.burnin {
            rows.push(test_functions(&p, &h));
        }
        regenerate(&mut data.y_tilde, &h, &state.mix, &table, &mut state.rng);
    }
    Ok(rows)
}

fn column(rows: &[Row], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (
        m,
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

/// z-scores of the difference in means; `a` is treated as iid, `b` gets an
/// autocorrelation-adjusted standard error when `b_correlated`.
pub fn compare(a: &[Row], b: &[Row], b_correlated: bool) -> Vec<GewekeStat> {
    (0..8)
        .map(|j| {
            let (ma, va) = mean_var(&column(a, j));
            let cb = column(b, j);
            let (mb, vb) = mean_var(&cb);
            let if_b = if b_correlated {
                inefficiency_factor(&cb).unwrap_or(1.0)
            } else {
                1.0
            };
            let se = (va / a.len() as f64 + vb * if_b / b.len() as f64).sqrt();
            GewekeStat {
                name: TEST_FUNCTIONS[j].to_string(),
                mean_a: ma,
                mean_b: mb,
                if_b,
                z: (ma - mb) / se,
            }
        })
        .collect()
}

/// Marginal-conditional against successive-conditional, each with `draws`
/// samples. Two child seeds are taken from `rng`.
pub fn geweke_test(cfg: &GewekeConfig, rng: &mut RandomStream) -> Result<GewekeReport> {
    let mut mc_rng = crate::rng::stream_from_seed(rng.random());
    let sc_rng = crate::rng::stream_from_seed(rng.random());
    let a = marginal_conditional(&cfg.priors, cfg.periods, cfg.draws, &mut mc_rng);
    let b = successive_conditional(cfg, sc_rng)?;
    Ok(GewekeReport {
        scheme: cfg.scheme,
        periods: cfg.periods,
        draws: cfg.draws,
        stats: compare(&a, &b, true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_from_seed;

    #[test]
    fn prior_draws_have_prior_moments() {
        let priors = geweke_priors();
        let mut rng = stream_from_seed(3);
        let rows = marginal_conditional(&priors, 10, 50_000, &mut rng);
        let (m_mu, _) = mean_var(&column(&rows, 0));
        let (m_phi, _) = mean_var(&column(&rows, 2));
        let (m_s2, _) = mean_var(&column(&rows, 4));
        assert!(m_mu.abs() < 4.0 / (50_000f64).sqrt());
        let e_phi = 2.0 * 10.0 / 11.5 - 1.0;
        assert!((m_phi - e_phi).abs() < 0.01);
        assert!((m_s2 - 0.1).abs() < 0.01);
    }

    #[test]
    fn null_calibration() {
        let priors = geweke_priors();
        let a = marginal_conditional(&priors, 20, 20_000, &mut stream_from_seed(1));
        let b = marginal_conditional(&priors, 20, 20_000, &mut stream_from_seed(2));
        for s in compare(&a, &b, false) {
            assert!(s.z.abs() < 4.0, "{s:?}");
        }
    }

    #[test]
    fn prior_indicator_frequencies() {
        let table = MixtureTable::omori();
        let r = prior_indicators(&table, 100_000, &mut stream_from_seed(9));
        for k in 0..10u8 {
            let f = r.iter().filter(|&&x| x == k).count() as f64 / 1e5;
            let w = table.weights()[k as usize];
            assert!((f - w).abs() < 4.0 * (w * (1.0 - w) / 1e5).sqrt() + 1e-9);
        }
    }
}
