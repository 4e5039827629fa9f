//! GIS-C fit of the vendored EUR/USD reference rates, writing the usual
//! output files to `out/eurusd_example`.
//!
//! ```text
//! cargo run --release --example fit_eurusd -- [draws]
//! ```

use std::path::Path;

use svmcmc::cli::{fit_series, summary_csv, write_fit_outputs, RunConfig};
use svmcmc::series::read_series;

fn main() -> svmcmc::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut cfg = RunConfig::load(&root.join("configs/fit_eurusd.toml"))?;
    if let Some(d) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.sampler.draws = d;
    } else {
        cfg.sampler.draws = 20_000;
        cfg.sampler.burnin = 2_000;
    }
    let input = root.join(cfg.input.path.as_ref().expect("config names the input"));
    let series = read_series(
        &input,
        cfg.input.column.as_deref(),
        cfg.input.date_column.as_deref(),
    )?;
    let report = fit_series(&series, &cfg)?;
    print!("{}", summary_csv(&report));

    let out = Path::new("out/eurusd_example");
    write_fit_outputs(&report, out, cfg.output.format)?;
    let v = &report.volatility;
    let peak = v
        .mean
        .iter()
        .cloned()
        .enumerate()
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let date = v
        .dates
        .as_ref()
        .map_or(String::new(), |d| d[peak.0].clone());
    println!("highest posterior mean volatility {:.3}% on {date}", peak.1);
    println!("outputs in {}", out.display());
    Ok(())
}
