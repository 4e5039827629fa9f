//! MCMC samplers for the SV model.
//!
//! Every scheme shares the same sweep skeleton: draw the latent path, update
//! the parameters, redraw the mixture indicators. The schemes differ in the
//! parameterization of the path and in how the parameters are blocked; the
//! interweaving schemes update the parameters once in each parameterization.

pub mod centered;
pub mod latent;
pub mod noncentered;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{sample_indicators_into, MixtureState, MixtureTable};
use crate::model::{Dataset, LatentPath, Parameterization, Parameters, Priors};
use crate::rng::RandomStream;

pub use centered::AuxPrior;
pub use latent::{
    build_band_system_centered, build_band_system_noncentered, draw_latent, LatentWorkspace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "c1")]
    C1,
    #[serde(rename = "c2")]
    C2,
    #[serde(rename = "c3")]
    C3,
    #[serde(rename = "nc2")]
    NC2,
    #[serde(rename = "nc3")]
    NC3,
    #[serde(rename = "gis-c")]
    GisC,
    #[serde(rename = "gis-nc")]
    GisNC,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::C1,
        Scheme::C2,
        Scheme::C3,
        Scheme::NC2,
        Scheme::NC3,
        Scheme::GisC,
        Scheme::GisNC,
    ];

    /// Parameterization in which the latent path is drawn.
    pub fn baseline(self) -> Parameterization {
        match self {
            Scheme::C1 | Scheme::C2 | Scheme::C3 | Scheme::GisC => Parameterization::Centered,
            Scheme::NC2 | Scheme::NC3 | Scheme::GisNC => Parameterization::NonCentered,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::C1 => "c1",
            Scheme::C2 => "c2",
            Scheme::C3 => "c3",
            Scheme::NC2 => "nc2",
            Scheme::NC3 => "nc3",
            Scheme::GisC => "gis-c",
            Scheme::GisNC => "gis-nc",
        }
    }

    /// Stable small integer used in stream derivation.
    pub fn id(self) -> u64 {
        Scheme::ALL.iter().position(|s| *s == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == key || sc.name().replace('-', "") == key)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

/// Blocking used on both legs of the interweaving schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Blocking {
    #[default]
    Two,
    Three,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub scheme: Scheme,
    pub burnin: usize,
    pub draws: usize,
    /// Keep every `thin_latent`-th stored path when `store_latent` is set.
    pub thin_latent: usize,
    pub store_latent: bool,
    pub aux_b0_11: f64,
    pub aux_b0_22: f64,
    pub gis_blocking: Blocking,
    /// Test hook that removes the initial-state factor from every MH ratio.
    /// Only useful for checking that the correctness tests catch it.
    #[serde(skip)]
    pub drop_initial_state_factor: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            scheme: Scheme::GisC,
            burnin: 2_000,
            draws: 20_000,
            thin_latent: 1,
            store_latent: false,
            aux_b0_11: 1e12,
            aux_b0_22: 1e8,
            gis_blocking: Blocking::Two,
            drop_initial_state_factor: false,
        }
    }
}

impl SamplerConfig {
    pub fn new(scheme: Scheme, burnin: usize, draws: usize) -> Self {
        SamplerConfig {
            scheme,
            burnin,
            draws,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws < 1 {
            return Err(Error::Config("draws must be >= 1".into()));
        }
        if self.thin_latent < 1 {
            return Err(Error::Config("thin_latent must be >= 1".into()));
        }
        for (name, v) in [("aux_b0_11", self.aux_b0_11), ("aux_b0_22", self.aux_b0_22)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn aux(&self) -> AuxPrior {
        AuxPrior {
            gamma_variance: self.aux_b0_11,
            phi_variance: self.aux_b0_22,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub proposed: u64,
    pub accepted: u64,
}

impl Tally {
    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Counts for every MH update; unused ones stay at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    /// Centered one-block `(μ, φ, σ²)`.
    pub joint: Tally,
    /// Centered `(γ, φ)`.
    pub gamma_phi: Tally,
    /// Centered three-block γ.
    pub gamma: Tally,
    /// Centered three-block φ.
    pub phi: Tally,
    /// Centered σ².
    pub sigma2: Tally,
    /// Non-centered φ.
    pub nc_phi: Tally,
    /// Proposals skipped because the regression system was degenerate.
    pub singular: u64,
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub params: Parameters,
    pub path: LatentPath,
    pub mix: MixtureState,
    pub rng: RandomStream,
}

impl ChainState {
    /// Starting state for `scheme`: the path sits at its stationary mean and
    /// all indicators at the highest-weight mixture component.
    pub fn initial(
        periods: usize,
        params: Parameters,
        scheme: Scheme,
        table: &MixtureTable,
        rng: RandomStream,
    ) -> Result<Self> {
        if !params.is_valid() {
            return Err(Error::Domain(format!(
                "invalid starting parameters {params:?}"
            )));
        }
        let parameterization = scheme.baseline();
        let level = match parameterization {
            Parameterization::Centered => params.mu,
            Parameterization::NonCentered => 0.0,
        };
        Ok(ChainState {
            params,
            path: LatentPath {
                states: vec![level; periods + 1],
                parameterization,
            },
            mix: MixtureState::constant(periods, table.highest_weight_component()),
            rng,
        })
    }
}

/// Prior means used as default starting values: `μ = b_μ`,
/// `φ = 2 a0 / (a0 + b0) − 1`, `σ = √B_σ`.
pub fn prior_mean_start(priors: &Priors) -> Parameters {
    Parameters {
        mu: priors.mu_mean,
        phi: 2.0 * priors.phi_a / (priors.phi_a + priors.phi_b) - 1.0,
        sigma: priors.sigma2_scale.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Mu,
    Phi,
    Sigma,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Mu, Param::Phi, Param::Sigma];

    pub fn name(self) -> &'static str {
        match self {
            Param::Mu => "mu",
            Param::Phi => "phi",
            Param::Sigma => "sigma",
        }
    }

    pub fn get(self, p: &Parameters) -> f64 {
        match self {
            Param::Mu => p.mu,
            Param::Phi => p.phi,
            Param::Sigma => p.sigma,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: Vec<Parameters>,
    /// Thinned centered paths `h_0 … h_T`, if requested.
    pub latent_draws: Option<Vec<Vec<f64>>>,
    pub acceptance: AcceptanceStats,
    /// Wall-clock seconds per 1000 iterations (burn-in included).
    pub seconds_per_1000: f64,
    pub final_state: ChainState,
}

impl ChainOutput {
    pub fn column(&self, param: Param) -> Vec<f64> {
        self.draws.iter().map(|p| param.get(p)).collect()
    }
}

/// Equality of everything except timing, which is never reproducible.
impl PartialEq for ChainOutput {
    fn eq(&self, other: &Self) -> bool {
        self.draws == other.draws
            && self.latent_draws == other.latent_draws
            && self.acceptance == other.acceptance
            && self.final_state.params == other.final_state.params
            && self.final_state.path == other.final_state.path
            && self.final_state.mix == other.final_state.mix
    }
}

/// One configured sweep, reusable across iterations and datasets of the
/// same length.
#[derive(Debug, Clone)]
pub struct Sampler {
    priors: Priors,
    cfg: SamplerConfig,
    table: MixtureTable,
    latent: LatentWorkspace,
    residuals: Vec<f64>,
}

impl Sampler {
    pub fn new(priors: Priors, cfg: SamplerConfig, table: MixtureTable) -> Result<Self> {
        priors.validate()?;
        cfg.validate()?;
        Ok(Sampler {
            priors,
            cfg,
            table,
            latent: LatentWorkspace::new(0),
            residuals: Vec::new(),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn table(&self) -> &MixtureTable {
        &self.table
    }

    fn check(&self, data: &Dataset, state: &ChainState) -> Result<()> {
        let n = data.len();
        if n < 2 {
            return Err(Error::Domain("sampler needs T >= 2".into()));
        }
        if state.path.periods() != n || state.mix.len() != n {
            return Err(Error::Domain(format!(
                "state sized for T={} (indicators {}), data has T={n}",
                state.path.periods(),
                state.mix.len()
            )));
        }
        if state.path.parameterization != self.cfg.scheme.baseline() {
            return Err(Error::Domain(format!(
                "scheme {} expects a {:?} path",
                self.cfg.scheme,
                self.cfg.scheme.baseline()
            )));
        }
        Ok(())
    }

    fn centered_params(
        &self,
        blocking: Option<Blocking>,
        state: &mut ChainState,
        stats: &mut AcceptanceStats,
    ) {
        let tg = centered::Target {
            priors: &self.priors,
            aux: self.cfg.aux(),
            drop_initial_state: self.cfg.drop_initial_state_factor,
        };
        let h = &state.path.states;
        match blocking {
            None => {
                centered::update_oneblock(&mut state.params, h, &tg, &mut state.rng, stats);
            }
            Some(Blocking::Two) => {
                centered::update_twoblock(&mut state.params, h, &tg, &mut state.rng, stats)
            }
            Some(Blocking::Three) => {
                centered::update_threeblock(&mut state.params, h, &tg, &mut state.rng, stats)
            }
        }
    }

    fn noncentered_params(
        &self,
        blocking: Blocking,
        data: &Dataset,
        state: &mut ChainState,
        stats: &mut AcceptanceStats,
    ) -> Result<()> {
        noncentered::update_phi(
            &mut state.params,
            &state.path.states,
            &self.priors,
            self.cfg.drop_initial_state_factor,
            &mut state.rng,
            stats,
        );
        noncentered::update_mu_sigma(
            &mut state.params,
            &mut state.path,
            data,
            &state.mix,
            &self.table,
            &self.priors,
            blocking == Blocking::Three,
            &mut state.rng,
        )
    }

    /// One full sweep of the configured scheme.
    pub fn step(
        &mut self,
        data: &Dataset,
        state: &mut ChainState,
        stats: &mut AcceptanceStats,
    ) -> Result<()> {
        self.check(data, state)?;
        draw_latent(
            &mut state.path,
            &state.params,
            &state.mix,
            data,
            &self.table,
            &mut self.latent,
            &mut state.rng,
        )?;
        let gis = self.cfg.gis_blocking;
        match self.cfg.scheme {
            Scheme::C1 => self.centered_params(None, state, stats),
            Scheme::C2 => self.centered_params(Some(Blocking::Two), state, stats),
            Scheme::C3 => self.centered_params(Some(Blocking::Three), state, stats),
            Scheme::NC2 => self.noncentered_params(Blocking::Two, data, state, stats)?,
            Scheme::NC3 => self.noncentered_params(Blocking::Three, data, state, stats)?,
            Scheme::GisC => {
                self.centered_params(Some(gis), state, stats);
                state
                    .path
                    .reparameterize(&state.params, Parameterization::NonCentered)?;
                self.noncentered_params(gis, data, state, stats)?;
                state
                    .path
                    .reparameterize(&state.params, Parameterization::Centered)?;
            }
            Scheme::GisNC => {
                self.noncentered_params(gis, data, state, stats)?;
                state
                    .path
                    .reparameterize(&state.params, Parameterization::Centered)?;
                self.centered_params(Some(gis), state, stats);
                state
                    .path
                    .reparameterize(&state.params, Parameterization::NonCentered)?;
            }
        }
        self.redraw_indicators(data, state);
        Ok(())
    }

    fn redraw_indicators(&mut self, data: &Dataset, state: &mut ChainState) {
        let h = &state.path.states[1..];
        self.residuals.clear();
        match state.path.parameterization {
            Parameterization::Centered => self
                .residuals
                .extend(data.y_tilde.iter().zip(h).map(|(y, h)| y - h)),
            Parameterization::NonCentered => {
                let p = state.params;
                self.residuals.extend(
                    data.y_tilde
                        .iter()
                        .zip(h)
                        .map(|(y, h)| y - p.mu - p.sigma * h),
                )
            }
        }
        sample_indicators_into(
            &self.residuals,
            &self.table,
            &mut state.rng,
            &mut state.mix.indicators,
        );
    }
}

/// Burn-in followed by `cfg.draws` stored iterations.
pub fn run_chain(
    data: &Dataset,
    priors: &Priors,
    cfg: &SamplerConfig,
    init: ChainState,
) -> Result<ChainOutput> {
    run_chain_with_table(data, priors, cfg, &MixtureTable::omori(), init)
}

pub fn run_chain_with_table(
    data: &Dataset,
    priors: &Priors,
    cfg: &SamplerConfig,
    table: &MixtureTable,
    init: ChainState,
) -> Result<ChainOutput> {
    let mut sampler = Sampler::new(*priors, cfg.clone(), table.clone())?;
    sampler.check(data, &init)?;
    let mut state = init;
    let mut stats = AcceptanceStats::default();
    let mut draws = Vec::with_capacity(cfg.draws);
    let mut latent = cfg.store_latent.then(Vec::new);
    let total = cfg.burnin + cfg.draws;
    let start = Instant::now();
    for it in 0..total {
        sampler
            .step(data, &mut state, &mut stats)
            .map_err(|e| Error::Chain {
                iteration: it,
                source: Box::new(e),
            })?;
        if it < cfg.burnin {
            continue;
        }
        draws.push(state.params);
        let kept = it - cfg.burnin;
        if let Some(store) = latent.as_mut() {
            if kept.is_multiple_of(cfg.thin_latent) {
                let h = match state.path.parameterization {
                    Parameterization::Centered => state.path.states.clone(),
                    Parameterization::NonCentered => state
                        .path
                        .states
                        .iter()
                        .map(|x| state.params.mu + state.params.sigma * x)
                        .collect(),
                };
                store.push(h);
            }
        }
    }
    let seconds_per_1000 = start.elapsed().as_secs_f64() * 1000.0 / total.max(1) as f64;
    Ok(ChainOutput {
        draws,
        latent_draws: latent,
        acceptance: stats,
        seconds_per_1000,
        final_state: state,
    })
}
