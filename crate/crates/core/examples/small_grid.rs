//! A miniature simulation study: two cells, three schemes, a few
//! replications, exported as CSV plus a text table.
//!
//! ```text
//! cargo run --release --example small_grid -- [workers]
//! ```

use std::path::Path;

use svmcmc::harness::{export_grid, render_table, run_grid_with_progress, ExportFormat, GridSpec};
use svmcmc::samplers::Blocking;
use svmcmc::Scheme;

fn main() -> svmcmc::Result<()> {
    let workers = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let spec = GridSpec {
        phi_values: vec![0.5, 0.98],
        sigma_values: vec![0.3],
        mu_true: -10.0,
        periods: 500,
        replications: 3,
        schemes: vec![Scheme::C2, Scheme::NC2, Scheme::GisC],
        draws: 3000,
        burnin: 500,
        base_seed: 6,
        gis_blocking: Blocking::Two,
        record_timing: true,
    };
    let result = run_grid_with_progress(&spec, workers, true)?;
    print!("{}", render_table(&result));
    let out = Path::new("out/small_grid");
    export_grid(&result, out, ExportFormat::Csv)?;
    println!("wrote {}", out.display());
    Ok(())
}
