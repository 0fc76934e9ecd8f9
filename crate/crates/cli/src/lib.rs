//! The `condgan` command line: pretrain a condition classifier, train a
//! conditioned GAN, evaluate generators with Parzen windows, and draw
//! samples.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data or parse
//! error, 1 anything else.

mod commands;
pub mod config;
pub mod image;
pub mod manifest;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use condgan::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Dimension { .. } => EXIT_USAGE,
            Error::Io { .. } | Error::Parse { .. } | Error::Input(_) => EXIT_DATA,
            Error::Shape(_) | Error::Contract(_) | Error::NonFinite { .. } | Error::Training { .. } => EXIT_INTERNAL,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "condgan", version, about = "Conditioned GANs with Parzen-window evaluation")]
pub struct Cli {
    /// Directory holding the dataset folders.
    #[arg(long, global = true, default_value = "data")]
    pub data_dir: PathBuf,

    /// `key = value` settings file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pretrain the condition classifier Q(c|x) used by irgan.
    PretrainQ(PretrainArgs),
    /// Train a conditioned GAN.
    Train(TrainArgs),
    /// Parzen-window log-likelihood of the test split, per condition.
    Eval(EvalArgs),
    /// Draw samples for one condition.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hidden layer widths, comma separated.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// cgan, fcgan, sbp or irgan.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub noise_dim: Option<usize>,
    #[arg(long)]
    pub g_hidden: Option<String>,
    #[arg(long)]
    pub d_hidden: Option<String>,
    /// Discriminator updates per generator update.
    #[arg(long)]
    pub d_steps: Option<usize>,
    /// minimax or non_saturating.
    #[arg(long)]
    pub generator_loss: Option<String>,
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    /// Pretrained Q; required for irgan.
    #[arg(long)]
    pub q_checkpoint: Option<PathBuf>,
    /// Directory with g.ckpt and d.ckpt to continue from.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Print a progress line every this many steps.
    #[arg(long, default_value_t = 100)]
    pub log_every: u64,
    /// Fill the wall_ms column of log.csv (makes the log non-reproducible).
    #[arg(long)]
    pub wall_time: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Generator checkpoint; repeat to tabulate several models.
    #[arg(long = "g-checkpoint", required = true)]
    pub g_checkpoint: Vec<PathBuf>,
    /// Defaults to the dataset recorded in the first checkpoint.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Bandwidth grid, comma separated and ascending.
    #[arg(long)]
    pub sigma_grid: Option<String>,
    #[arg(long)]
    pub samples_per_condition: Option<usize>,
    /// per_condition or global.
    #[arg(long)]
    pub sigma_mode: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also evaluate the exact sampler of a synthetic dataset.
    #[arg(long)]
    pub oracle: bool,
    /// Also evaluate each model with its conditions permuted at sampling time.
    #[arg(long)]
    pub shuffled_control: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long = "g-checkpoint")]
    pub g_checkpoint: PathBuf,
    #[arg(long)]
    pub condition: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::PretrainQ(a) => commands::pretrain_q(&cli, a),
        Command::Train(a) => commands::train(&cli, a),
        Command::Eval(a) => commands::eval(&cli, a),
        Command::Sample(a) => commands::sample(&cli, a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
