//! Inefficiency factors of AR(1) chains with known integrated
//! autocorrelation time `(1 + a) / (1 - a)`, by both estimators.
//!
//! ```text
//! cargo run --release --example inefficiency -- [length]
//! ```

use rand::Rng;
use rand_distr::StandardNormal;
use svmcmc::diagnostics::{inefficiency_factor_with, IfMethod};
use svmcmc::rng::stream_from_seed;

fn main() -> svmcmc::Result<()> {
    let n = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200_000);
    println!(
        "{:>5} {:>9} {:>12} {:>12}",
        "a", "exact", "AR spectrum", "batch means"
    );
    for a in [0.0, 0.5, 0.9, 0.99] {
        let mut rng = stream_from_seed(5);
        let mut x = 0.0;
        let chain: Vec<f64> = (0..n)
            .map(|_| {
                x = a * x + rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        let ar = inefficiency_factor_with(&chain, IfMethod::ArSpectrum)?;
        let bm = inefficiency_factor_with(&chain, IfMethod::BatchMeans)?;
        println!(
            "{a:>5} {:>9.1} {ar:>12.2} {bm:>12.2}",
            (1.0 + a) / (1.0 - a)
        );
    }
    Ok(())
}
