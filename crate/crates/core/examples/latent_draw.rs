//! The one-shot latent state draw on its own: build the tridiagonal system
//! for fixed parameters and indicators, draw many paths and compare their
//! average with the exact conditional mean.
//!
//! ```text
//! cargo run --release --example latent_draw
//! ```

use svmcmc::bandlinalg::{awol_draw, cholesky, solve_lower, solve_upper};
use svmcmc::mixture::{sample_indicators, MixtureTable};
use svmcmc::model::{linearize, simulate, Parameters};
use svmcmc::rng::stream_from_seed;
use svmcmc::samplers::latent::build_band_system_centered;

fn main() -> svmcmc::Result<()> {
    let p = Parameters::new(-10.0, 0.95, 0.25)?;
    let mut rng = stream_from_seed(4);
    let (y, truth) = simulate(&p, 500, &mut rng)?;
    let data = linearize(&y, Some(0.0), false)?;
    let table = MixtureTable::omori();
    let resid: Vec<f64> = data
        .y_tilde
        .iter()
        .zip(&truth.states[1..])
        .map(|(a, h)| a - h)
        .collect();
    let mix = sample_indicators(&resid, &table, &mut rng);

    let (omega, c) = build_band_system_centered(&data, &mix, &p, &table)?;
    let f = cholesky(&omega)?;
    let mean = solve_upper(&f, &solve_lower(&f, &c)?)?;

    let n = 2000;
    let mut avg = vec![0.0; mean.len()];
    for _ in 0..n {
        for (a, h) in avg.iter_mut().zip(awol_draw(&omega, &c, &mut rng)?) {
            *a += h / n as f64;
        }
    }
    let max_dev = avg
        .iter()
        .zip(&mean)
        .map(|(a, m)| (a - m).abs())
        .fold(0.0, f64::max);
    let rmse = (mean
        .iter()
        .zip(&truth.states[1..])
        .map(|(m, h)| (m - h).powi(2))
        .sum::<f64>()
        / mean.len() as f64)
        .sqrt();
    println!("T = {}, {n} draws", mean.len());
    println!("max |average draw - conditional mean| = {max_dev:.4}");
    println!("rmse of conditional mean against the simulated path = {rmse:.3}");
    for t in [0, 100, 250, 499] {
        println!(
            "t={:>3}  true h {:>8.3}  mean {:>8.3}",
            t + 1,
            truth.states[t + 1],
            mean[t]
        );
    }
    Ok(())
}
