//! `bidisk`: spectra, kernel bundles and reducibility of compressed shifts from a JSON
//! description of a rational inner function or polynomial.

mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use bidisk::io::InnerInput;
use bidisk::quotient::DEFAULT_COMMUTANT_DEGREE;
use bidisk::reduce::{DEFAULT_MAX_ORDER, DEFAULT_PRODUCT_LENGTH};
use bidisk::spectrum::{DEFAULT_GRID, DEFAULT_RADIUS, DEFAULT_TOL};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(#[from] bidisk::Error),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "bidisk",
    version,
    about = "Compressed shifts on quotient modules of the bidisk Hardy space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Spectrum summary, index vector, essential curves and Cowen-Douglas verdicts.
    Analyze,
    /// Grid classification as CSV and PGM.
    SpectrumMap,
    /// Traced essential curves.
    Curves,
    /// Frame, Gram, connection and curvature at chosen points.
    Bundle,
    /// Local and strict reducibility.
    ReduceCheck,
    /// Truncated quotient: compressed shift, commutant estimate and weight tables.
    QuotientLab,
}

#[derive(clap::Args, Debug, Clone)]
struct Options {
    /// JSON description of the inner function or polynomial.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Grid nodes per side.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Classification tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Truncation degree of the quotient.
    #[arg(long, global = true)]
    degree: Option<usize>,
    /// Seed for random sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Point `re,im` for the bundle report; repeatable.
    #[arg(long, global = true, value_parser = parse_point, allow_hyphen_values = true)]
    lambda: Vec<[f64; 2]>,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected re,im, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([parse(re)?, parse(im)?])
}

/// Every numeric parameter of a run; echoed into each report.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub command: &'static str,
    pub radius: f64,
    pub grid: usize,
    pub tol: f64,
    pub degree: usize,
    pub interior_degree: usize,
    pub seed: u64,
    pub curve_steps: usize,
    pub fd_step: f64,
    pub max_order: usize,
    pub product_length: usize,
    pub threads: Option<usize>,
    pub lambda: Vec<[f64; 2]>,
}

pub const DEFAULT_CURVE_STEPS: usize = 1024;
/// The interior block stays this many degrees below the truncation.
pub const INTERIOR_GAP: usize = 4;

fn config(command: Command, opts: &Options, threads: Option<usize>) -> Result<Config, CliError> {
    let degree = opts.degree.unwrap_or(DEFAULT_COMMUTANT_DEGREE);
    if degree < 2 {
        return Err(CliError::Parse(format!(
            "--degree must be at least 2, got {degree}"
        )));
    }
    let tol = opts.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Parse(format!(
            "--tol must be positive, got {tol}"
        )));
    }
    Ok(Config {
        command: command.name(),
        radius: DEFAULT_RADIUS,
        grid: opts.grid.unwrap_or(DEFAULT_GRID),
        tol,
        degree,
        interior_degree: degree.saturating_sub(INTERIOR_GAP).max(1),
        seed: opts.seed.unwrap_or(0),
        curve_steps: DEFAULT_CURVE_STEPS,
        fd_step: bidisk::bundle::DEFAULT_FD_STEP,
        max_order: DEFAULT_MAX_ORDER,
        product_length: DEFAULT_PRODUCT_LENGTH,
        threads,
        lambda: opts.lambda.clone(),
    })
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::SpectrumMap => "spectrum-map",
            Command::Curves => "curves",
            Command::Bundle => "bundle",
            Command::ReduceCheck => "reduce-check",
            Command::QuotientLab => "quotient-lab",
        }
    }
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("BIDISK_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Parse(format!(
                "BIDISK_THREADS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn load(path: Option<&Path>) -> Result<InnerInput, CliError> {
    let path = path.ok_or_else(|| CliError::Parse("--input is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    InnerInput::parse(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let threads = threads_from_env()?;
    if let Some(n) = threads {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let cfg = config(cli.command, &cli.opts, threads)?;
    let desc = load(cli.opts.input.as_deref())?;
    let theta = desc.build()?;
    std::fs::create_dir_all(&cli.opts.out).map_err(|e| CliError::io(&cli.opts.out, e))?;
    let job = commands::Job {
        desc: &desc,
        theta: &theta,
        cfg: &cfg,
        out: &cli.opts.out,
    };
    match cli.command {
        Command::Analyze => commands::analyze(&job),
        Command::SpectrumMap => commands::spectrum_map(&job),
        Command::Curves => commands::curves(&job),
        Command::Bundle => commands::bundle(&job),
        Command::ReduceCheck => commands::reduce_check(&job),
        Command::QuotientLab => commands::quotient_lab(&job),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bidisk: {e}");
            ExitCode::from(e.code())
        }
    }
}
