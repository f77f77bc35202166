//! Batch front end: `lacunary <command> --config <file>`.
//!
//! Exit status: 0 when every check passes or is diagnostic, 1 when a check
//! fails, 2 for usage and config errors, 3 for errors raised by the
//! numerical routines, 4 for I/O and manifest conflicts. Errors are written
//! to stderr as `{"error":{"kind":..,"message":..}}`.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

pub use commands::{BLOCK_BAND, CHUNG_ORACLE_BAND, LIL_BAND, MOMENT_SPREAD_LIMIT};
pub use config::{Experiment, ExperimentConfig};
pub use output::{format_f64, Format, Manifest, OutputDir, Table, MANIFEST};

use crate::error::LabError;
use crate::limits::TestReport;

#[derive(Debug, Parser)]
#[command(name = "lacunary", version, about = "Random lacunary sums: variance, mixing and limit-law checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads (default: available processors).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Format of tabular outputs; reports are always JSON.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// A_x by closed form, truncated series and Monte Carlo
    Variance,
    /// Density of S_n x mod 1 at step `n`
    Density,
    /// Uniformity gap per step and geometric decay fit
    Decay,
    /// Block schedule table for blocks 1..=n
    Schedule,
    /// Block variance ratios at n/4 and n
    Blocks,
    /// Kolmogorov-Smirnov test of S_N / sqrt(A_x N)
    Clt,
    /// Iterated-logarithm band over many trajectories
    Lil,
    /// Chung statistic against the Brownian oracle
    Chung,
    /// Integral-test classification
    Kefp,
    /// Fourth-moment ratio
    Moment4,
    /// Every check above
    Battery,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Variance => "variance",
            Command::Density => "density",
            Command::Decay => "decay",
            Command::Schedule => "schedule",
            Command::Blocks => "blocks",
            Command::Clt => "clt",
            Command::Lil => "lil",
            Command::Chung => "chung",
            Command::Kefp => "kefp",
            Command::Moment4 => "moment4",
            Command::Battery => "battery",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    ManifestMismatch(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "invalid-config",
            CliError::Lab(e) => e.kind(),
            CliError::Io(_) => "io",
            CliError::ManifestMismatch(_) => "manifest-mismatch",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Lab(_) => 3,
            CliError::Io(_) | CliError::ManifestMismatch(_) => 4,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } }).to_string()
    }
}

/// What a successful run produced.
#[derive(Debug)]
pub struct Outcome {
    pub reports: Vec<TestReport>,
    pub manifest: Manifest,
    pub stdout: String,
}

impl Outcome {
    pub fn all_ok(&self) -> bool {
        self.reports.iter().all(|r| r.verdict.is_ok())
    }
}

pub fn load_experiment(cli: &Cli) -> Result<Experiment, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut exp = ExperimentConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = cli.seed {
        exp.config.seed = seed;
    }
    Ok(exp)
}

/// Run one command on a worker pool of the requested size.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let exp = load_experiment(cli)?;
    let workers = match cli.workers {
        Some(0) => return Err(CliError::Usage("--workers must be positive".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out = OutputDir::open(&cli.out, &exp.config.hash(), exp.config.seed, cli.format)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    pool.install(|| {
        let mut session = commands::Session::new(&exp, out);
        session.run(cli.command)?;
        let commands::Session {
            out, reports, stdout, ..
        } = session;
        Ok(Outcome {
            reports,
            manifest: out.finish()?,
            stdout,
        })
    })
}

/// Parse arguments, run, print, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if outcome.all_ok() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
