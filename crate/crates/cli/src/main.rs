mod commands;
mod config;
mod predict;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Train and run deep peephole-LSTM classifiers of two-phase flow regimes.
#[derive(Debug, Parser)]
#[command(name = "flowlstm", version, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random draw (data generation, splits, init, shuffling).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path; its meaning depends on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with `seed`, `[data]`, `[train]` and `[bench]` settings;
    /// flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for generation and training (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory (signals + manifest).
    Generate(GenerateArgs),
    /// Train a network on a dataset and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Classify a single signal file.
    Predict(PredictArgs),
    /// Accuracy versus segment length for one architecture.
    BenchSeqlen(BenchSeqlenArgs),
    /// Accuracy and relative prediction time across architectures.
    BenchArch(BenchArchArgs),
    /// Export the PDF/CPDF of a signal file as CSV.
    Inspect(InspectArgs),
}

#[derive(Debug, Args, Default)]
pub struct DataFlags {
    /// Test conditions generated per regime.
    #[arg(long)]
    pub conditions: Option<usize>,
    /// Length of each test condition, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Segment length, seconds.
    #[arg(long)]
    pub seg: Option<f64>,
    /// Append the time-reversed copy of every segment.
    #[arg(long)]
    pub reverse: bool,
    /// Samples per second.
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// Fraction of each regime's conditions used for training.
    #[arg(long)]
    pub split: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct TrainFlags {
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub min_lr: Option<f64>,
    /// Non-improving epochs between learning-rate halvings.
    #[arg(long)]
    pub lr_patience: Option<usize>,
    /// Non-improving epochs before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Global gradient-norm clip; 0 disables clipping.
    #[arg(long)]
    pub clip: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub data: DataFlags,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Architecture descriptor, e.g. `LSTM-128H-2ReLU` or `(LSTM-128H-2ReLU)x2`.
    #[arg(long, default_value = "LSTM-128H-2ReLU")]
    pub arch: String,
    /// Width of the feature layer and every ReLU layer.
    #[arg(long)]
    pub feature_dim: Option<usize>,
    /// Dataset directory written by `generate`.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitChoice,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Signal file; longer signals are cut into windows and majority-voted.
    #[arg(long)]
    pub signal: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchSeqlenArgs {
    #[arg(long)]
    pub arch: Option<String>,
    /// Comma-separated segment lengths in seconds.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<f64>>,
    /// Timed repetitions after the warm-up pass.
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[command(flatten)]
    pub data: DataFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct BenchArchArgs {
    /// Comma-separated descriptors; must include LSTM-128H-2ReLU.
    #[arg(long, value_delimiter = ',')]
    pub archs: Option<Vec<String>>,
    /// Divide every hidden cell count by this for reduced-size runs.
    #[arg(long)]
    pub hidden_divisor: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[command(flatten)]
    pub data: DataFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub signal: PathBuf,
    /// Histogram bins over [0, 1].
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

/// Failure classes mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, descriptors, or configuration values: exit 2.
    Usage(String),
    /// Anything that went wrong while running: exit 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<flowlstm::Error> for CliError {
    fn from(e: flowlstm::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
