//! Command-line front end of `wishart-sim`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 numeric failure (step underflow, singular operator, ...).

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::Config;

use crate::error::WishartError;
use crate::finance::{bond_price_mc, FactorModel, Issuer};
use crate::matrix::{vech, PsdMatrix};
use crate::mc::par_paths;
use crate::rng::RngStream;
use crate::sde::{
    simulate_besq, simulate_cir, simulate_square_ou, simulate_wishart_adaptive, CirParams, OuParams, PathRecord,
    WishartParams,
};
use crate::validation::suite::{run_suite, Check, SuiteOptions, DEFAULT_SEED};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] WishartError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Engine(e) if e.is_numeric_failure() => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wishart-sim", version, about = "Simulate, validate and price with Wishart processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate paths and write one CSV per path (or a JSON array).
    Simulate(RunArgs),
    /// Run the validation suite and write a JSON array of reports.
    Validate(RunArgs),
    /// Price a zero-coupon bond by Monte Carlo.
    Price(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Piecewise-constant resampling step for simulated paths.
    #[arg(long)]
    pub resample: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Validate,
    Price,
}

#[derive(Debug, Clone)]
pub enum ProcessSpec {
    Wishart(WishartParams),
    Cir(CirParams),
    Besq { alpha: f64, x0: f64 },
    SquareOu { params: OuParams, dt: f64 },
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub process: Option<ProcessSpec>,
    pub horizon: f64,
    pub h0: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub resample: Option<f64>,
    pub pricing: Option<PricingSpec>,
    pub checks: Vec<Check>,
    pub z_max: f64,
}

#[derive(Debug, Clone)]
pub struct PricingSpec {
    pub model: FactorModel,
    pub issuer: Option<usize>,
    pub maturity: f64,
}

const COMMON_KEYS: &[&str] = &["process", "T", "h0", "paths", "seed", "format", "resample"];
const PROCESS_KEYS: &[&str] = &[
    "wishart.Q",
    "wishart.K",
    "wishart.alpha",
    "wishart.s0",
    "cir.a",
    "cir.b",
    "cir.sigma",
    "cir.r0",
    "besq.alpha",
    "besq.x0",
    "square_ou.n",
    "square_ou.A",
    "square_ou.B",
    "square_ou.s0",
    "square_ou.dt",
];
const PRICE_KEYS: &[&str] = &["price.maturity", "price.issuer", "model.c", "model.C"];
const VALIDATE_KEYS: &[&str] = &["validate.checks", "validate.z_max"];

fn issuer_key(key: &str) -> bool {
    let mut parts = key.split('.');
    matches!(
        (parts.next(), parts.next().map(|i| i.parse::<usize>().is_ok()), parts.next(), parts.next()),
        (Some("issuer"), Some(true), Some("d" | "D"), None)
    )
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parameter errors raised while building the run are configuration errors.
fn param<T>(r: crate::error::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| config_err(e.to_string()))
}

impl RunConfig {
    pub fn from_parts(command: CommandKind, cfg: &Config, args: &RunArgs) -> Result<Self, CliError> {
        cfg.check_keys(|k| {
            COMMON_KEYS.contains(&k)
                || PROCESS_KEYS.contains(&k)
                || (command == CommandKind::Price && (PRICE_KEYS.contains(&k) || issuer_key(k)))
                || (command == CommandKind::Validate && VALIDATE_KEYS.contains(&k))
        })?;
        let horizon = cfg.opt_f64("T")?.unwrap_or(1.0);
        let h0 = cfg.opt_f64("h0")?.unwrap_or(1e-3);
        if !(horizon > 0.0) {
            return Err(config_err(format!("T must be > 0, got {horizon}")));
        }
        if !(h0 > 0.0 && h0 <= horizon) {
            return Err(config_err(format!("h0 must satisfy 0 < h0 <= T, got {h0}")));
        }
        let default_paths = match command {
            CommandKind::Price => 1000,
            _ => 1,
        };
        let n_paths = match args.paths {
            Some(n) => n,
            None => cfg.opt_u64("paths")?.map_or(default_paths, |n| n as usize),
        };
        if n_paths == 0 {
            return Err(config_err("paths must be >= 1"));
        }
        let seed = match args.seed {
            Some(s) => s,
            None => cfg.opt_u64("seed")?.unwrap_or(if command == CommandKind::Validate { DEFAULT_SEED } else { 0 }),
        };
        let format = match (args.format, cfg.opt_str("format")?) {
            (Some(f), _) => f,
            (None, None) => Format::Csv,
            (None, Some(s)) => Format::from_str(s, true).map_err(|_| config_err(format!("unknown format `{s}`")))?,
        };
        let resample = match args.resample {
            Some(dt) => Some(dt),
            None => cfg.opt_f64("resample")?,
        };
        if let Some(dt) = resample {
            if !(dt > 0.0) {
                return Err(config_err(format!("resample step must be > 0, got {dt}")));
            }
        }
        let process = match cfg.opt_str("process")? {
            None => None,
            Some(name) => Some(parse_process(name, cfg, h0)?),
        };
        let pricing = if command == CommandKind::Price {
            Some(parse_pricing(cfg, process.as_ref(), horizon)?)
        } else {
            None
        };
        if command == CommandKind::Simulate && process.is_none() {
            return Err(config_err("missing required key `process`"));
        }
        let checks = match cfg.opt_strings("validate.checks")? {
            None => Check::ALL.to_vec(),
            Some(names) => names.iter().map(|n| n.parse::<Check>()).collect::<Result<_, _>>().map_err(|e| config_err(e.to_string()))?,
        };
        let z_max = cfg.opt_f64("validate.z_max")?.unwrap_or(crate::validation::DEFAULT_Z_MAX);
        Ok(RunConfig {
            command,
            process,
            horizon,
            h0,
            n_paths,
            seed,
            out: args.out.clone(),
            format,
            resample,
            pricing,
            checks,
            z_max,
        })
    }
}

fn parse_process(name: &str, cfg: &Config, h0: f64) -> Result<ProcessSpec, CliError> {
    match name {
        "wishart" => {
            let q = cfg.matrix("wishart.Q")?;
            let p = q.nrows();
            let k = cfg.matrix("wishart.K")?;
            let alpha = cfg.f64("wishart.alpha")?;
            let s0 = cfg.opt_psd("wishart.s0")?.unwrap_or_else(|| PsdMatrix::identity(p));
            Ok(ProcessSpec::Wishart(param(WishartParams::new(q, k, alpha, s0))?))
        }
        "cir" => Ok(ProcessSpec::Cir(param(CirParams::new(
            cfg.f64("cir.a")?,
            cfg.f64("cir.b")?,
            cfg.f64("cir.sigma")?,
            cfg.f64("cir.r0")?,
        ))?)),
        "besq" => {
            let alpha = cfg.f64("besq.alpha")?;
            let x0 = cfg.f64("besq.x0")?;
            if alpha < 0.0 || x0 < 0.0 {
                return Err(config_err("besq.alpha and besq.x0 must be >= 0"));
            }
            Ok(ProcessSpec::Besq { alpha, x0 })
        }
        "square_ou" => {
            let n = cfg.u64("square_ou.n")? as usize;
            let a = cfg.matrix("square_ou.A")?;
            let b = cfg.matrix("square_ou.B")?;
            let p = a.nrows();
            let s0 = cfg.opt_psd("square_ou.s0")?.unwrap_or_else(|| PsdMatrix::identity(p));
            let dt = cfg.opt_f64("square_ou.dt")?.unwrap_or(h0);
            if !(dt > 0.0) {
                return Err(config_err("square_ou.dt must be > 0"));
            }
            if n < p + 1 {
                return Err(config_err(format!("square_ou.n must be >= p+1 = {}", p + 1)));
            }
            Ok(ProcessSpec::SquareOu {
                params: param(OuParams::with_start_state(n, a, b, &s0))?,
                dt,
            })
        }
        other => Err(config_err(format!("unknown process `{other}` (wishart | cir | besq | square_ou)"))),
    }
}

fn parse_pricing(cfg: &Config, process: Option<&ProcessSpec>, horizon: f64) -> Result<PricingSpec, CliError> {
    let maturity = cfg.opt_f64("price.maturity")?.unwrap_or(horizon);
    let issuer = cfg.opt_u64("price.issuer")?.map(|i| i as usize);
    let model = match process {
        Some(ProcessSpec::Cir(cir)) => {
            if cfg.contains("model.c") || cfg.contains("model.C") {
                return Err(config_err("model.c / model.C are fixed (0 and 1) for a CIR short rate"));
            }
            param(FactorModel::cir_replica(cir))?
        }
        Some(ProcessSpec::Wishart(w)) => {
            let p = w.dim();
            let c = cfg.opt_f64("model.c")?.unwrap_or(0.0);
            let loading = cfg.opt_psd("model.C")?.unwrap_or_else(|| PsdMatrix::identity(p));
            let mut issuers = Vec::new();
            for i in 0.. {
                let (dk, mk) = (format!("issuer.{i}.d"), format!("issuer.{i}.D"));
                if !cfg.contains(&dk) && !cfg.contains(&mk) {
                    break;
                }
                issuers.push(Issuer {
                    d: cfg.opt_f64(&dk)?.unwrap_or(0.0),
                    loading: cfg.opt_psd(&mk)?.unwrap_or_else(|| PsdMatrix::zeros(p)),
                });
            }
            param(FactorModel::new(c, loading, issuers, w.clone()))?
        }
        _ => return Err(config_err("price needs process = wishart or process = cir")),
    };
    if let Some(i) = issuer {
        if i >= model.issuers.len() {
            return Err(config_err(format!("price.issuer = {i} but {} issuers are defined", model.issuers.len())));
        }
    }
    Ok(PricingSpec { model, issuer, maturity })
}

/// Uniform grid `0, dt, 2dt, ...` closed at `horizon`.
fn uniform_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt * (1.0 - 1e-12)).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    if *grid.last().expect("non-empty") < horizon {
        grid.push(horizon);
    }
    grid
}

pub fn simulate_paths(run: &RunConfig) -> Result<Vec<PathRecord>, CliError> {
    let process = run.process.as_ref().ok_or_else(|| config_err("missing required key `process`"))?;
    let root = RngStream::new(run.seed, 0);
    let (horizon, h0) = (run.horizon, run.h0);
    let paths = par_paths(&root, run.n_paths, |_, rng| match process {
        ProcessSpec::Wishart(w) => simulate_wishart_adaptive(w, horizon, h0, rng),
        ProcessSpec::Cir(c) => simulate_cir(c, horizon, h0, rng),
        ProcessSpec::Besq { alpha, x0 } => simulate_besq(*alpha, *x0, horizon, h0, rng),
        ProcessSpec::SquareOu { params, dt } => simulate_square_ou(params, &uniform_grid(horizon, *dt), rng),
    })?;
    match run.resample {
        Some(dt) => Ok(paths.iter().map(|p| p.resample(dt)).collect::<crate::error::Result<_>>()?),
        None => Ok(paths),
    }
}

fn csv_header(p: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for j in 1..=p {
        for i in 1..=j {
            cols.push(format!("S_{i}_{j}"));
        }
    }
    cols.extend((1..=p).map(|i| format!("eig_{i}")));
    cols.push("h_used".to_string());
    cols.join(",")
}

/// One row per state: `t`, `vech(S)`, ascending eigenvalues, `h_used`.
pub fn path_to_csv(path: &PathRecord) -> String {
    let mut out = csv_header(path.dim());
    out.push('\n');
    for ((t, s), h) in path.times.iter().zip(&path.states).zip(path.step_sizes()) {
        let mut row = vec![t.to_string()];
        row.extend(vech(s).iter().map(f64::to_string));
        row.extend(s.eigenvalues().iter().map(f64::to_string));
        row.push(h.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, text)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Io(std::io::Error::other(e)))
}

fn run_simulate(run: &RunConfig) -> Result<u8, CliError> {
    let paths = simulate_paths(run)?;
    match run.format {
        Format::Json => write_output(run.out.as_deref(), &to_json(&paths)?)?,
        Format::Csv => match (&run.out, paths.as_slice()) {
            (None, [single]) => write_output(None, &path_to_csv(single))?,
            (None, _) => return Err(config_err("CSV output of several paths needs --out <dir>")),
            (Some(dir), _) => {
                fs::create_dir_all(dir)?;
                for (i, path) in paths.iter().enumerate() {
                    fs::write(dir.join(format!("path_{i:05}.csv")), path_to_csv(path))?;
                }
            }
        },
    }
    Ok(EXIT_OK)
}

fn run_validate(run: &RunConfig) -> Result<u8, CliError> {
    let opts = SuiteOptions {
        seed: run.seed,
        z_max: run.z_max,
    };
    let reports = run_suite(&run.checks, &opts)?;
    write_output(run.out.as_deref(), &to_json(&reports)?)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        log::error!("{} of {} comparisons failed: {}", failed.len(), reports.len(), failed.join(", "));
        Ok(EXIT_VALIDATION_FAILED)
    }
}

#[derive(Serialize)]
struct PriceOutput {
    estimate: f64,
    std_error: Option<f64>,
    n_paths: usize,
}

fn run_price(run: &RunConfig) -> Result<u8, CliError> {
    let spec = run.pricing.as_ref().ok_or_else(|| config_err("price needs a factor model"))?;
    let summary = bond_price_mc(
        &spec.model,
        spec.issuer,
        spec.maturity,
        run.n_paths,
        run.h0.min(spec.maturity),
        &RngStream::new(run.seed, 0),
    )?;
    let text = serde_json::to_string(&PriceOutput {
        estimate: summary.estimate,
        std_error: summary.std_error,
        n_paths: summary.n_paths,
    })
    .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    if let Some(path) = &run.out {
        write_output(Some(path), &format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli) -> Result<u8, CliError> {
    let (kind, args) = match &cli.command {
        Command::Simulate(a) => (CommandKind::Simulate, a),
        Command::Validate(a) => (CommandKind::Validate, a),
        Command::Price(a) => (CommandKind::Price, a),
    };
    let cfg = match &args.config {
        Some(path) => Config::from_file(path)?,
        None if kind == CommandKind::Validate => Config::default(),
        None => return Err(config_err("--config <file> is required")),
    };
    let run = RunConfig::from_parts(kind, &cfg, args)?;
    match kind {
        CommandKind::Simulate => run_simulate(&run),
        CommandKind::Validate => run_validate(&run),
        CommandKind::Price => run_price(&run),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wishart-sim: {e}");
            e.exit_code()
        }
    }
}
