//! Command-line front end: `fit`, `bench`, `simulate` and `geweke`.
//!
//! Every command reads an optional TOML file (see `configs/`) whose sections
//! mirror [`RunConfig`]; flags override the file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::diagnostics::geweke::{geweke_priors, geweke_test, GewekeConfig, GewekeReport};
use crate::diagnostics::{quantile_sorted, summarize, PosteriorSummary};
use crate::error::{Error, Result};
use crate::harness::{export_grid, run_grid_with_progress, ExportFormat, GridSpec};
use crate::mixture::MixtureTable;
use crate::model::{linearize, relative_offset, simulate, Parameters, Priors};
use crate::rng::{derive_stream, stream_from_seed};
use crate::samplers::{
    prior_mean_start, run_chain, AcceptanceStats, Blocking, ChainState, Param, SamplerConfig,
    Scheme,
};
use crate::series::{log_returns, read_series, Series, SeriesKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    pub column: Option<String>,
    /// Passed through to `latent_path.csv`. Defaults to a column named `date`.
    pub date_column: Option<String>,
    pub kind: SeriesKind,
    pub demean: bool,
    /// Offset inside `log(y² + c)`; scaled to the data when absent.
    pub offset: Option<f64>,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            path: None,
            column: None,
            date_column: None,
            kind: SeriesKind::Prices,
            demean: true,
            offset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: ExportFormat,
    /// Approximate number of parameter draws and latent paths kept for
    /// plotting.
    pub stored_draws: usize,
    pub acf_lags: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            format: ExportFormat::Csv,
            stored_draws: 1000,
            acf_lags: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub mu: f64,
    pub phi: f64,
    pub sigma: f64,
    pub periods: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            mu: -10.0,
            phi: 0.95,
            sigma: 0.2,
            periods: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GewekeSection {
    pub schemes: Vec<Scheme>,
    pub periods: usize,
    pub draws: usize,
    pub burnin: usize,
    pub threshold: f64,
    pub priors: Priors,
    pub gis_blocking: Blocking,
}

impl Default for GewekeSection {
    fn default() -> Self {
        let g = GewekeConfig::default();
        GewekeSection {
            schemes: Scheme::ALL.to_vec(),
            periods: g.periods,
            draws: g.draws,
            burnin: g.burnin,
            threshold: 4.0,
            priors: geweke_priors(),
            gis_blocking: g.gis_blocking,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub input: InputConfig,
    pub sampler: SamplerConfig,
    pub priors: Priors,
    pub output: OutputConfig,
    pub grid: Option<GridSpec>,
    pub geweke: GewekeSection,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            input: InputConfig::default(),
            sampler: SamplerConfig::default(),
            priors: Priors::default(),
            output: OutputConfig::default(),
            grid: None,
            geweke: GewekeSection::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.priors.validate()?;
        self.geweke.priors.validate()?;
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        if self.output.stored_draws < 1 {
            return Err(Error::Config("output.stored_draws must be >= 1".into()));
        }
        if let Some(c) = self.input.offset {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("input.offset must be >= 0, got {c}")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub scheme: Scheme,
    pub draws: usize,
    pub burnin: usize,
    pub seed: u64,
    pub periods: usize,
    pub column: String,
    pub kind: SeriesKind,
    pub demeaned: bool,
    pub offset: f64,
    pub priors: Priors,
    pub acceptance: AcceptanceStats,
}

/// Pointwise posterior of `100 · exp(h_t / 2)`, `t = 1 … T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityBands {
    pub dates: Option<Vec<String>>,
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub meta: FitMeta,
    pub summary: PosteriorSummary,
    pub volatility: VolatilityBands,
    /// `(iteration, draw)` pairs after thinning.
    pub thinned: Vec<(usize, Parameters)>,
    /// Autocorrelations of μ, φ, σ at lags `0 …`; `None` for a constant chain.
    pub acf: [Option<Vec<f64>>; 3],
}

/// Sample autocorrelations at lags `0 … max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return None;
    }
    Some(
        (0..=max_lag.min(n.saturating_sub(1)))
            .map(|k| {
                d[..n - k]
                    .iter()
                    .zip(&d[k..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / c0
            })
            .collect(),
    )
}

/// Converts, linearizes and fits a series with the configured scheme.
pub fn fit_series(series: &Series, cfg: &RunConfig) -> Result<FitReport> {
    cfg.validate()?;
    let returns = match cfg.input.kind {
        SeriesKind::Prices => log_returns(series)?,
        SeriesKind::Returns => series.clone(),
    };
    if returns.values.len() < 10 {
        return Err(Error::Input(format!(
            "need at least 10 returns, got {}",
            returns.values.len()
        )));
    }
    let offset = cfg
        .input
        .offset
        .unwrap_or_else(|| relative_offset(&returns.values, cfg.input.demean));
    let data = linearize(&returns.values, Some(offset), cfg.input.demean)?;
    let periods = data.len();

    let mut sc = cfg.sampler.clone();
    sc.store_latent = true;
    let thin = (sc.draws / cfg.output.stored_draws).max(1);
    sc.thin_latent = thin;
    let table = MixtureTable::omori();
    let start = prior_mean_start(&cfg.priors);
    let init = ChainState::initial(
        periods,
        start,
        sc.scheme,
        &table,
        stream_from_seed(cfg.seed),
    )?;
    let out = run_chain(&data, &cfg.priors, &sc, init)?;
    let summary = summarize(&out)?;

    let paths = out.latent_draws.as_deref().unwrap_or(&[]);
    let mut vol = VolatilityBands {
        dates: returns.dates.clone(),
        mean: Vec::with_capacity(periods),
        q05: Vec::with_capacity(periods),
        q95: Vec::with_capacity(periods),
    };
    let mut col = vec![0.0; paths.len()];
    for t in 1..=periods {
        for (c, p) in col.iter_mut().zip(paths) {
            *c = 100.0 * (0.5 * p[t]).exp();
        }
        vol.mean.push(col.iter().sum::<f64>() / col.len() as f64);
        col.sort_by(f64::total_cmp);
        vol.q05.push(quantile_sorted(&col, 0.05));
        vol.q95.push(quantile_sorted(&col, 0.95));
    }

    let thinned = out
        .draws
        .iter()
        .enumerate()
        .step_by(thin)
        .map(|(i, p)| (sc.burnin + i + 1, *p))
        .collect();
    let acf = Param::ALL.map(|p| autocorrelation(&out.column(p), cfg.output.acf_lags));

    Ok(FitReport {
        meta: FitMeta {
            scheme: sc.scheme,
            draws: sc.draws,
            burnin: sc.burnin,
            seed: cfg.seed,
            periods,
            column: returns.column.clone(),
            kind: cfg.input.kind,
            demeaned: cfg.input.demean,
            offset,
            priors: cfg.priors,
            acceptance: out.acceptance,
        },
        summary,
        volatility: vol,
        thinned,
        acf,
    })
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Input(e.to_string()))
}

pub fn summary_csv(report: &FitReport) -> String {
    let m = &report.meta;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# scheme={} draws={} burnin={} seed={} T={} offset={}",
        m.scheme, m.draws, m.burnin, m.seed, m.periods, m.offset
    );
    s.push_str("parameter,mean,sd,q05,q50,q95,if,ess\n");
    for p in &report.summary.params {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.name,
            p.mean,
            p.sd,
            p.q05,
            p.q50,
            p.q95,
            na(p.inefficiency),
            na(p.ess)
        );
    }
    s
}

/// Writes `summary.{csv|json}`, `latent_path.csv`, `draws_thinned.csv` and
/// `acf.csv` into `dir`.
pub fn write_fit_outputs(report: &FitReport, dir: &Path, format: ExportFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match format {
        ExportFormat::Csv => write(&dir.join("summary.csv"), &summary_csv(report))?,
        ExportFormat::Json => {
            #[derive(Serialize)]
            struct SummaryFile<'a> {
                meta: &'a FitMeta,
                summary: &'a PosteriorSummary,
            }
            let body = to_json(&SummaryFile {
                meta: &report.meta,
                summary: &report.summary,
            })?;
            write(&dir.join("summary.json"), &body)?;
        }
    }

    let v = &report.volatility;
    let mut s = String::from("# volatility = 100 * exp(h_t / 2), percent per period\n");
    s.push_str(if v.dates.is_some() {
        "t,date,mean,q05,q95\n"
    } else {
        "t,mean,q05,q95\n"
    });
    for t in 0..v.mean.len() {
        let _ = write!(s, "{}", t + 1);
        if let Some(d) = &v.dates {
            let _ = write!(s, ",{}", d[t]);
        }
        let _ = writeln!(s, ",{},{},{}", v.mean[t], v.q05[t], v.q95[t]);
    }
    write(&dir.join("latent_path.csv"), &s)?;

    let mut s = String::from("iteration,mu,phi,sigma\n");
    for (i, p) in &report.thinned {
        let _ = writeln!(s, "{i},{},{},{}", p.mu, p.phi, p.sigma);
    }
    write(&dir.join("draws_thinned.csv"), &s)?;

    let mut s = String::from("lag,mu,phi,sigma\n");
    let lags = report.acf.iter().flatten().map(Vec::len).max().unwrap_or(0);
    for k in 0..lags {
        let cell = |a: &Option<Vec<f64>>| na(a.as_ref().and_then(|v| v.get(k).copied()));
        let _ = writeln!(
            s,
            "{k},{},{},{}",
            cell(&report.acf[0]),
            cell(&report.acf[1]),
            cell(&report.acf[2])
        );
    }
    write(&dir.join("acf.csv"), &s)
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<FitReport> {
    let path = cfg
        .input
        .path
        .as_deref()
        .ok_or_else(|| Error::Config("fit needs input.path or --input".into()))?;
    let series = read_series(
        path,
        cfg.input.column.as_deref(),
        cfg.input.date_column.as_deref(),
    )?;
    let report = fit_series(&series, cfg)?;
    write_fit_outputs(&report, &cfg.output.dir, cfg.output.format)?;
    Ok(report)
}

// ---------------------------------------------------------------- simulate

pub fn simulated_csv(cfg: &RunConfig) -> Result<String> {
    let s = &cfg.simulate;
    let p = Parameters::new(s.mu, s.phi, s.sigma)?;
    let (y, path) = simulate(&p, s.periods, &mut stream_from_seed(cfg.seed))?;
    let h = &path.states;
    let mut out = String::new();
    let _ = writeln!(out, "# mu={}", p.mu);
    let _ = writeln!(out, "# phi={}", p.phi);
    let _ = writeln!(out, "# sigma={}", p.sigma);
    let _ = writeln!(out, "# periods={}", s.periods);
    let _ = writeln!(out, "# seed={}", cfg.seed);
    let _ = writeln!(out, "# h0={}", h[0]);
    out.push_str("t,y,h\n");
    for t in 1..=s.periods {
        let _ = writeln!(out, "{t},{},{}", y[t - 1], h[t]);
    }
    Ok(out)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<PathBuf> {
    let body = simulated_csv(cfg)?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("simulated.csv");
    write(&path, &body)?;
    Ok(path)
}

// ---------------------------------------------------------------- bench

pub fn worker_count(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("SV_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
    .unwrap_or(1)
    .max(1)
}

pub fn cmd_bench(cfg: &RunConfig, workers: usize) -> Result<crate::harness::GridResult> {
    let spec = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::Config("bench needs a [grid] section".into()))?;
    let result = run_grid_with_progress(spec, workers, true)?;
    export_grid(&result, &cfg.output.dir, cfg.output.format)?;
    Ok(result)
}

// ---------------------------------------------------------------- geweke

pub fn run_geweke(cfg: &RunConfig, drop_initial_state_factor: bool) -> Result<Vec<GewekeReport>> {
    let g = &cfg.geweke;
    g.schemes
        .iter()
        .map(|&scheme| {
            let gc = GewekeConfig {
                scheme,
                periods: g.periods,
                priors: g.priors,
                draws: g.draws,
                burnin: g.burnin,
                gis_blocking: g.gis_blocking,
                drop_initial_state_factor,
            };
            geweke_test(&gc, &mut derive_stream(cfg.seed, &[scheme.id()]))
        })
        .collect()
}

pub fn geweke_text(reports: &[GewekeReport], threshold: f64) -> String {
    let mut s = String::new();
    for r in reports {
        let verdict = if r.passes(threshold) { "pass" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{:<7} T={} draws={} max|z|={:.3} {verdict}",
            r.scheme,
            r.periods,
            r.draws,
            r.max_abs_z()
        );
        for st in &r.stats {
            let _ = writeln!(
                s,
                "    {:<8} prior={:<12.6} chain={:<12.6} if={:<8.2} z={:.3}",
                st.name, st.mean_a, st.mean_b, st.if_b, st.z
            );
        }
    }
    s
}

pub fn geweke_csv(reports: &[GewekeReport]) -> String {
    let mut s = String::from("scheme,test_function,mean_prior,mean_chain,if_chain,z\n");
    for r in reports {
        for st in &r.stats {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.scheme, st.name, st.mean_a, st.mean_b, st.if_b, st.z
            );
        }
    }
    s
}

/// Runs the configured checks, writes `geweke_report.{csv|json}` and returns
/// whether every `|z|` stayed below the threshold.
pub fn cmd_geweke(cfg: &RunConfig, drop_initial_state_factor: bool) -> Result<(bool, String)> {
    let reports = run_geweke(cfg, drop_initial_state_factor)?;
    let threshold = cfg.geweke.threshold;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match cfg.output.format {
        ExportFormat::Csv => write(&dir.join("geweke_report.csv"), &geweke_csv(&reports))?,
        ExportFormat::Json => write(&dir.join("geweke_report.json"), &to_json(&reports)?)?,
    }
    let ok = reports.iter().all(|r| r.passes(threshold));
    Ok((ok, geweke_text(&reports, threshold)))
}

// ---------------------------------------------------------------- clap

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "svmcmc", version, about = "Stochastic volatility MCMC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// c1, c2, c3, nc2, nc3, gis-c or gis-nc.
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a price or return series from a CSV file.
    Fit {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        column: Option<String>,
        /// Treat the column as returns instead of prices.
        #[arg(long)]
        returns: bool,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
    },
    /// Run the simulation grid of the `[grid]` section.
    Bench {
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Simulate returns and the latent path.
    Simulate {
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Joint-distribution correctness check of the samplers.
    Geweke {
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Remove the initial-state factor from the MH ratios (the check
        /// should then fail).
        #[arg(long, hide = true)]
        drop_initial_state_factor: bool,
    },
}

/// Config file plus the global flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
        if let Some(g) = cfg.grid.as_mut() {
            g.base_seed = s;
        }
    }
    if let Some(d) = &cli.out_dir {
        cfg.output.dir = d.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::Json => ExportFormat::Json,
        };
    }
    if let Some(s) = cli.scheme {
        cfg.sampler.scheme = s;
        cfg.geweke.schemes = vec![s];
        if let Some(g) = cfg.grid.as_mut() {
            g.schemes = vec![s];
        }
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Fit {
            input,
            column,
            returns,
            draws,
            burnin,
        } => {
            if input.is_some() {
                cfg.input.path = input;
            }
            if column.is_some() {
                cfg.input.column = column;
            }
            if returns {
                cfg.input.kind = SeriesKind::Returns;
            }
            if let Some(d) = draws {
                cfg.sampler.draws = d;
            }
            if let Some(b) = burnin {
                cfg.sampler.burnin = b;
            }
            let report = cmd_fit(&cfg)?;
            print!("{}", summary_csv(&report));
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { workers } => {
            let result = cmd_bench(&cfg, worker_count(workers))?;
            print!("{}", crate::harness::render_table(&result));
            if !result.failures.is_empty() {
                eprintln!("{} chains failed", result.failures.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            periods,
            mu,
            phi,
            sigma,
        } => {
            let s = &mut cfg.simulate;
            s.periods = periods.unwrap_or(s.periods);
            s.mu = mu.unwrap_or(s.mu);
            s.phi = phi.unwrap_or(s.phi);
            s.sigma = sigma.unwrap_or(s.sigma);
            let path = cmd_simulate(&cfg)?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Geweke {
            draws,
            periods,
            threshold,
            drop_initial_state_factor,
        } => {
            let g = &mut cfg.geweke;
            g.draws = draws.unwrap_or(g.draws);
            g.periods = periods.unwrap_or(g.periods);
            g.threshold = threshold.unwrap_or(g.threshold);
            let (ok, text) = cmd_geweke(&cfg, drop_initial_state_factor)?;
            print!("{text}");
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
