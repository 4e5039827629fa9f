//! Simulation-study driver.
//!
//! A grid of true `(φ, σ)` values, `replications` simulated datasets per
//! cell and every scheme run on each dataset. Each (cell, replication,
//! scheme) task is independent and gets its own derived random stream, so
//! the result does not depend on how tasks are spread over threads.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{inefficiency_factor, quantile_sorted};
use crate::error::{Error, Result};
use crate::mixture::MixtureTable;
use crate::model::{linearize, simulate, Parameters, Priors};
use crate::rng::derive_stream;
use crate::samplers::{run_chain, Blocking, ChainState, Param, SamplerConfig, Scheme};

/// Stream key slot used for data simulation; schemes use `Scheme::id() ≥ 1`.
pub const DATA_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub phi_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
    #[serde(default = "default_mu")]
    pub mu_true: f64,
    pub periods: usize,
    pub replications: usize,
    pub schemes: Vec<Scheme>,
    pub draws: usize,
    pub burnin: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub gis_blocking: Blocking,
    /// Emit wall-time rows. They are the only non-reproducible output.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_mu() -> f64 {
    -10.0
}

fn default_true() -> bool {
    true
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.phi_values.iter().find(|p| !(p.abs() < 1.0)) {
            return Err(Error::Config(format!("phi value {p} outside (-1, 1)")));
        }
        if let Some(s) = self
            .sigma_values
            .iter()
            .find(|s| !(**s > 0.0 && s.is_finite()))
        {
            return Err(Error::Config(format!("sigma value {s} must be positive")));
        }
        if !self.mu_true.is_finite() {
            return Err(Error::Config("mu_true must be finite".into()));
        }
        if self.replications < 1 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.periods < 2 {
            return Err(Error::Config("periods must be >= 2".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        SamplerConfig::new(Scheme::GisC, self.burnin, self.draws).validate()
    }

    /// Cells in `(φ, σ)` order, φ outermost.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.phi_values
            .iter()
            .flat_map(|&p| self.sigma_values.iter().map(move |&s| (p, s)))
            .collect()
    }

    pub fn truth(&self, phi: f64, sigma: f64) -> Parameters {
        Parameters {
            mu: self.mu_true,
            phi,
            sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    IfMu,
    IfPhi,
    IfSigma,
    TimePer1000,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [
        Quantity::IfMu,
        Quantity::IfPhi,
        Quantity::IfSigma,
        Quantity::TimePer1000,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::IfMu => "if_mu",
            Quantity::IfPhi => "if_phi",
            Quantity::IfSigma => "if_sigma",
            Quantity::TimePer1000 => "time_per_1000",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown quantity '{s}'")))
    }
}

/// One (cell, scheme, quantity) aggregate with the per-replication values
/// (`None` where that replication failed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub phi: f64,
    pub sigma: f64,
    pub scheme: Scheme,
    pub quantity: Quantity,
    pub median: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub raw: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub phi: f64,
    pub sigma: f64,
    pub replication: usize,
    pub scheme: Scheme,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub spec: GridSpec,
    pub rows: Vec<GridRow>,
    pub failures: Vec<GridFailure>,
}

impl GridResult {
    pub fn row(&self, phi: f64, sigma: f64, scheme: Scheme, q: Quantity) -> Option<&GridRow> {
        self.rows
            .iter()
            .find(|r| r.phi == phi && r.sigma == sigma && r.scheme == scheme && r.quantity == q)
    }

    pub fn median(&self, phi: f64, sigma: f64, scheme: Scheme, q: Quantity) -> Option<f64> {
        self.row(phi, sigma, scheme, q).and_then(|r| r.median)
    }
}

/// Median of the finite values (mean of the two middle order statistics).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}

/// Outcome of one (cell, replication, scheme) task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub cell: usize,
    pub replication: usize,
    pub scheme: Scheme,
    /// IF per parameter in `Param::ALL` order, or the error message.
    pub inefficiency: [std::result::Result<f64, String>; 3],
    pub seconds_per_1000: Option<f64>,
    pub error: Option<String>,
}

/// Simulates the dataset of `(cell, replication)` and runs one scheme on it.
pub fn run_task(spec: &GridSpec, cell: usize, replication: usize, scheme: Scheme) -> TaskOutcome {
    let (phi, sigma) = spec.cells()[cell];
    let truth = spec.truth(phi, sigma);
    let key = [cell as u64, replication as u64];
    let fail = |msg: String| TaskOutcome {
        cell,
        replication,
        scheme,
        inefficiency: [Err(msg.clone()), Err(msg.clone()), Err(msg.clone())],
        seconds_per_1000: None,
        error: Some(msg),
    };
    let run = || -> Result<_> {
        let mut data_rng = derive_stream(spec.base_seed, &[key[0], key[1], DATA_STREAM]);
        let (y, _) = simulate(&truth, spec.periods, &mut data_rng)?;
        let data = linearize(&y, Some(0.0), false)?;
        let mut cfg = SamplerConfig::new(scheme, spec.burnin, spec.draws);
        cfg.gis_blocking = spec.gis_blocking;
        let chain_rng = derive_stream(spec.base_seed, &[key[0], key[1], scheme.id()]);
        let init = ChainState::initial(
            spec.periods,
            truth,
            scheme,
            &MixtureTable::omori(),
            chain_rng,
        )?;
        run_chain(&data, &Priors::centered_on(&truth), &cfg, init)
    };
    match run() {
        Ok(out) => TaskOutcome {
            cell,
            replication,
            scheme,
            inefficiency: Param::ALL
                .map(|p| inefficiency_factor(&out.column(p)).map_err(|e| e.to_string())),
            seconds_per_1000: Some(out.seconds_per_1000),
            error: None,
        },
        Err(e) => fail(e.to_string()),
    }
}

pub fn run_grid(spec: &GridSpec, workers: usize) -> Result<GridResult> {
    run_grid_with_progress(spec, workers, false)
}

/// As [`run_grid`], optionally printing one line per finished task to
/// standard error.
pub fn run_grid_with_progress(
    spec: &GridSpec,
    workers: usize,
    progress: bool,
) -> Result<GridResult> {
    spec.validate()?;
    if workers < 1 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let cells = spec.cells();
    let tasks: Vec<(usize, usize, Scheme)> = (0..cells.len())
        .flat_map(|c| {
            (0..spec.replications).flat_map(move |r| spec.schemes.iter().map(move |&s| (c, r, s)))
        })
        .collect();
    let total = tasks.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<TaskOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r, s)| {
                let out = run_task(spec, c, r, s);
                if progress {
                    let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                    let (phi, sigma) = cells[c];
                    let status = out.error.as_deref().unwrap_or("ok");
                    eprintln!("[{n}/{total}] phi={phi} sigma={sigma} rep={r} {s}: {status}");
                }
                out
            })
            .collect()
    });
    Ok(aggregate(spec, &outcomes))
}

/// Reduces task outcomes (in task order) to per-cell medians.
pub fn aggregate(spec: &GridSpec, outcomes: &[TaskOutcome]) -> GridResult {
    let cells = spec.cells();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (c, &(phi, sigma)) in cells.iter().enumerate() {
        for &scheme in &spec.schemes {
            let mine: Vec<&TaskOutcome> = outcomes
                .iter()
                .filter(|o| o.cell == c && o.scheme == scheme)
                .collect();
            for o in &mine {
                let msg = o.error.clone().or_else(|| {
                    o.inefficiency
                        .iter()
                        .zip(Param::ALL)
                        .find_map(|(r, p)| r.as_ref().err().map(|e| format!("{}: {e}", p.name())))
                });
                if let Some(message) = msg {
                    failures.push(GridFailure {
                        phi,
                        sigma,
                        replication: o.replication,
                        scheme,
                        message,
                    });
                }
            }
            for q in Quantity::ALL {
                if q == Quantity::TimePer1000 && !spec.record_timing {
                    continue;
                }
                let raw: Vec<Option<f64>> = mine
                    .iter()
                    .map(|o| match q {
                        Quantity::IfMu => o.inefficiency[0].as_ref().ok().copied(),
                        Quantity::IfPhi => o.inefficiency[1].as_ref().ok().copied(),
                        Quantity::IfSigma => o.inefficiency[2].as_ref().ok().copied(),
                        Quantity::TimePer1000 => o.seconds_per_1000,
                    })
                    .map(|v| v.filter(|x| x.is_finite()))
                    .collect();
                let ok: Vec<f64> = raw.iter().flatten().copied().collect();
                rows.push(GridRow {
                    phi,
                    sigma,
                    scheme,
                    quantity: q,
                    median: median(&ok),
                    n_ok: ok.len(),
                    n_failed: raw.len() - ok.len(),
                    raw,
                });
            }
        }
    }
    GridResult {
        spec: spec.clone(),
        rows,
        failures,
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "phi", "sigma", "scheme", "quantity", "median", "n_ok", "n_failed", "raw",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s == "NA" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Input(format!("bad number '{s}'")))
}

/// CSV serialization: one row per cell × scheme × quantity. Raw values are
/// `;`-separated in replication order with `NA` for failures.
pub fn grid_csv(result: &GridResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &result.rows {
        let raw: Vec<String> = r.raw.iter().map(|v| fmt_opt(*v)).collect();
        w.write_record([
            r.phi.to_string(),
            r.sigma.to_string(),
            r.scheme.to_string(),
            r.quantity.name().to_string(),
            fmt_opt(r.median),
            r.n_ok.to_string(),
            r.n_failed.to_string(),
            raw.join(";"),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

/// Inverse of [`grid_csv`].
pub fn parse_grid_csv(text: &str) -> Result<Vec<GridRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Input(format!("unexpected grid header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let ctx = |e: Error| Error::Input(format!("row {}: {e}", i + 2));
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse()
                .map_err(|_| Error::Input(format!("bad number '{}'", &rec[j])))
        };
        let count = |j: usize| -> Result<usize> {
            rec[j]
                .parse()
                .map_err(|_| Error::Input(format!("bad count '{}'", &rec[j])))
        };
        let raw = if rec[7].is_empty() {
            Vec::new()
        } else {
            rec[7]
                .split(';')
                .map(parse_opt)
                .collect::<Result<_>>()
                .map_err(ctx)?
        };
        rows.push(GridRow {
            phi: num(0).map_err(ctx)?,
            sigma: num(1).map_err(ctx)?,
            scheme: rec[2].parse().map_err(ctx)?,
            quantity: Quantity::parse(&rec[3]).map_err(ctx)?,
            median: parse_opt(&rec[4]).map_err(ctx)?,
            n_ok: count(5).map_err(ctx)?,
            n_failed: count(6).map_err(ctx)?,
            raw,
        });
    }
    Ok(rows)
}

/// Text tables with σ down the rows and φ across, one block per quantity
/// and scheme.
pub fn render_table(result: &GridResult) -> String {
    let spec = &result.spec;
    let mut s = String::new();
    for q in Quantity::ALL {
        if q == Quantity::TimePer1000 && !spec.record_timing {
            continue;
        }
        for &scheme in &spec.schemes {
            let _ = writeln!(s, "{} ({})", q.name(), scheme);
            let _ = write!(s, "{:>8}", "sigma");
            for phi in &spec.phi_values {
                let _ = write!(s, " {:>9}", format!("phi={phi}"));
            }
            s.push('\n');
            for &sigma in &spec.sigma_values {
                let _ = write!(s, "{sigma:>8}");
                for &phi in &spec.phi_values {
                    let cell = match result.median(phi, sigma, scheme, q) {
                        Some(v) if q == Quantity::TimePer1000 => format!("{v:.3}"),
                        Some(v) => format!("{v:.0}"),
                        None => "NA".to_string(),
                    };
                    let _ = write!(s, " {cell:>9}");
                }
                s.push('\n');
            }
            s.push('\n');
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

/// Writes `grid_result.{csv|json}` and `grid_table.txt` into `dir`.
pub fn export_grid(result: &GridResult, dir: &Path, format: ExportFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (name, body) = match format {
        ExportFormat::Csv => ("grid_result.csv", grid_csv(result)?),
        ExportFormat::Json => (
            "grid_result.json",
            serde_json::to_string_pretty(result).map_err(|e| Error::Input(e.to_string()))? + "\n",
        ),
    };
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    let path = dir.join("grid_table.txt");
    fs::write(&path, render_table(result)).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> GridSpec {
        GridSpec {
            phi_values: vec![0.5, 0.9],
            sigma_values: vec![0.3],
            mu_true: -10.0,
            periods: 100,
            replications: 2,
            schemes: vec![Scheme::C2, Scheme::GisC],
            draws: 300,
            burnin: 20,
            base_seed: 7,
            gis_blocking: Blocking::Two,
            record_timing: false,
        }
    }

    #[test]
    fn median_matches_sort_oracle() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn rows_per_cell_and_scheme() {
        let spec = small_spec();
        let res = run_grid(&spec, 1).unwrap();
        assert_eq!(res.rows.len(), 2 * 2 * 3);
        assert!(res.failures.is_empty());
        for r in &res.rows {
            assert_eq!(r.n_ok + r.n_failed, 2);
        }
        let mut timed = spec.clone();
        timed.record_timing = true;
        timed.phi_values.truncate(1);
        timed.replications = 1;
        let res = run_grid(&timed, 1).unwrap();
        assert_eq!(res.rows.len(), 2 * 4);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = small_spec();
        s.phi_values.push(1.0);
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.replications = 0;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.sigma_values = vec![-0.1];
        assert!(s.validate().is_err());
    }

    #[test]
    fn empty_grid_gives_header_only_csv() {
        let mut spec = small_spec();
        spec.phi_values.clear();
        let res = aggregate(&spec, &[]);
        let text = grid_csv(&res).unwrap();
        assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
        assert!(parse_grid_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn failed_replications_are_excluded() {
        let spec = GridSpec {
            replications: 3,
            phi_values: vec![0.5],
            schemes: vec![Scheme::C2],
            ..small_spec()
        };
        let ok = |r: usize, v: f64| TaskOutcome {
            cell: 0,
            replication: r,
            scheme: Scheme::C2,
            inefficiency: [Ok(v), Ok(v), Ok(v)],
            seconds_per_1000: Some(1.0),
            error: None,
        };
        let bad = TaskOutcome {
            inefficiency: [Err("x".into()), Err("x".into()), Err("x".into())],
            seconds_per_1000: None,
            error: Some("x".into()),
            ..ok(1, 0.0)
        };
        let res = aggregate(&spec, &[ok(0, 2.0), bad, ok(2, 6.0)]);
        let row = res.row(0.5, 0.3, Scheme::C2, Quantity::IfMu).unwrap();
        assert_eq!(row.median, Some(4.0));
        assert_eq!((row.n_ok, row.n_failed), (2, 1));
        assert_eq!(row.raw, vec![Some(2.0), None, Some(6.0)]);
        assert_eq!(res.failures.len(), 1);
    }
}
