//! Bayesian estimation of the stochastic volatility model by MCMC with
//! ancillarity-sufficiency interweaving.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod bandlinalg;
pub mod cli;
mod dens;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod mixture;
pub mod model;
pub mod rng;
pub mod samplers;
pub mod series;

pub use error::{Error, Result};
pub use mixture::{MixtureState, MixtureTable};
pub use model::{Dataset, LatentPath, Parameterization, Parameters, Priors};
pub use samplers::{run_chain, ChainOutput, ChainState, SamplerConfig, Scheme};
