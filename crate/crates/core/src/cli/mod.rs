//! The `sevkit` command line: `prepare`, `train`, `explain`, `compare`,
//! `volcheck` and `stats`. Exit codes are 0 on success, 1 when a
//! computation fails and 2 for usage or input errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
pub mod manifest;
pub mod report;

pub use commands::PreparedDir;
pub use manifest::{FileDigest, RunManifest};

use crate::data::DataError;
use crate::model::ModelError;
use crate::optim::OptimError;
use crate::sev::SevError;

/// Caps the rayon pool when set.
pub const THREADS_ENV: &str = "SEVKIT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Usage(_) | CliError::Input(_) => 2,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::CorruptPayload(_) | ModelError::VersionMismatch { .. } | ModelError::InvalidConfig(_) => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<OptimError> for CliError {
    fn from(e: OptimError) -> Self {
        match e {
            OptimError::InvalidConfig(_) | OptimError::VolOptOnNonlinearModel | OptimError::AllFeaturesRestricted | OptimError::DimensionTooLarge(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<SevError> for CliError {
    fn from(e: SevError) -> Self {
        match e {
            SevError::ReferenceNotNegative => CliError::Compute(format!(
                "{e}; retrain with a positive reference-penalty weight (c2) so the reference scores below the threshold"
            )),
            SevError::DimensionMismatch { .. } | SevError::RestrictedSetInvalid(_) => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sevkit", version, about = "Sparse explanation values for binary classifiers")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON file with command settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split, encode and standardize a CSV and build the reference point.
    Prepare(PrepareArgs),
    /// Fit a baseline or train with a SEV term.
    Train(TrainArgs),
    /// Compute SEV for the positively predicted rows of a split.
    Explain(ExplainArgs),
    /// Flip counts under supplied importance orderings, next to SEV⁻.
    Compare(CompareArgs),
    /// Monte-Carlo check of the SEV⁺ ≥ 2 volume for linear models.
    Volcheck(VolcheckArgs),
    /// Summarize an explanations file.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Use this file as the test split instead of splitting `--csv`.
    #[arg(long)]
    pub test_csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "linear")]
    pub model: crate::model::ModelKind,
    #[arg(long, default_value = "none")]
    pub sev: crate::optim::SevTerm,
    /// Fit the family's conventional baseline instead of the staged objective.
    #[arg(long)]
    pub baseline: bool,
    /// Baseline penalty for linear models.
    #[arg(long, default_value = "l2", value_parser = ["l1", "l2"])]
    pub penalty: String,
    /// Inverse regularization strength for linear baselines.
    #[arg(long, default_value_t = 0.01)]
    pub c: f64,
    #[arg(long, default_value_t = crate::model::mlp::DEFAULT_HIDDEN)]
    pub hidden: usize,
    /// Comma-separated feature names; defaults to the schema's restricted features.
    #[arg(long)]
    pub restricted: Option<String>,
    /// Use the volume-loss clamp exactly as printed (`min` instead of a floor).
    #[arg(long)]
    pub paper_literal_clamp: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// model.json written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: PathBuf,
    /// plus, minus or restricted.
    #[arg(long, default_value = "plus")]
    pub kind: crate::sev::SevKind,
    /// Deepest search level [default: 6].
    #[arg(long)]
    pub depth_limit: Option<usize>,
    /// Explanations kept per query [default: 32].
    #[arg(long)]
    pub max_explanations: Option<usize>,
    /// Comma-separated feature names; defaults to the schema's restricted features.
    #[arg(long)]
    pub restricted: Option<String>,
    /// Comma-separated row indices of the split.
    #[arg(long)]
    pub query_ids: Option<String>,
    #[arg(long, default_value = "test", value_parser = ["train", "test"])]
    pub split: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// CSV of feature ranks (1 = most important), one global row or one row
    /// per `query_id`.
    #[arg(long)]
    pub importance: PathBuf,
    #[arg(long, default_value = "test", value_parser = ["train", "test"])]
    pub split: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VolcheckArgs {
    /// Linear model to check; the canonical `1[-1 + Σx > 0]` when absent.
    #[arg(long, requires = "data")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Dimension of the canonical classifier.
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// JSONL written by `explain`.
    #[arg(long)]
    pub explanations: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    init_threads();
    match cli.command {
        Command::Prepare(a) => commands::prepare(&a),
        Command::Train(a) => commands::train(&a),
        Command::Explain(a) => commands::explain(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Volcheck(a) => commands::volcheck(&a),
        Command::Stats(a) => commands::stats(&a),
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
