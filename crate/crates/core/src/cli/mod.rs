//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed `--verify` check, 2 IO, 3 training
//! divergence, 64 usage, 65 configuration or data mismatch.

pub mod config;
pub mod manifest;

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::restorer::LossNorm;
use crate::schedule::ScheduleKind;
use config::{List, StartRange, Switch};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Lib(Error::Io { .. }) => EXIT_IO,
            CliError::Lib(Error::Diverged { .. }) => EXIT_DIVERGED,
            CliError::Lib(_) => EXIT_CONFIG,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "cdiffmr", version, about = "Cold diffusion MRI reconstruction from undersampled k-space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic phantom dataset
    Phantom(PhantomArgs),
    /// Print a sampling-rate schedule and the start step for an AF
    Schedule(ScheduleArgs),
    /// Generate a task mask and optionally a mask family
    Mask(MaskArgs),
    /// Train a convolutional restorer
    Train(TrainArgs),
    /// Reconstruct one image from synthesized measurements
    Recon(ReconArgs),
    /// Evaluate a restorer over a dataset and a grid of settings
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// key=value settings file; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed (default: $CDIFF_SEED, else 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Schedule kind: lin or log
    #[arg(long)]
    pub kind: Option<ScheduleKind>,
    /// Number of diffusion steps T
    #[arg(long = "steps", visible_alias = "T")]
    pub steps: Option<usize>,
    /// Sampling rate at step T
    #[arg(long)]
    pub sr_min: Option<f64>,
    /// Seed of the family's random column order
    #[arg(long)]
    pub family_seed: Option<u64>,
    /// Centre block of the family masks as a fraction of the width
    #[arg(long)]
    pub family_center_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub n_ellipses: Option<usize>,
    #[arg(long)]
    pub phase_order: Option<usize>,
    /// Output dataset directory
    #[arg(long)]
    pub out: Option<String>,
    /// Also write PGM previews
    #[arg(long)]
    pub pgm: bool,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Image width used for the column counts
    #[arg(long)]
    pub width: Option<usize>,
    /// Acceleration factor whose start step is reported
    #[arg(long)]
    pub af: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub af: Option<f64>,
    #[arg(long)]
    pub center_fraction: Option<f64>,
    /// Also write the mask family
    #[arg(long = "family")]
    pub write_family: bool,
    #[arg(long)]
    pub pgm: bool,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Dataset directory
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub grad_steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// l1 or l2
    #[arg(long)]
    pub loss: Option<LossNorm>,
    /// Print the running loss every N steps (0 = never)
    #[arg(long)]
    pub log_every: Option<usize>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct RestorerArgs {
    /// Checkpoint to load
    #[arg(long)]
    pub model: Option<String>,
    /// Use the ground truth as the restorer
    #[arg(long)]
    pub oracle: bool,
    /// Use the identity restorer
    #[arg(long)]
    pub zerofill: bool,
}

#[derive(Debug, Args)]
pub struct SamplerArgs {
    #[arg(long)]
    pub dcc: Option<Switch>,
    #[arg(long)]
    pub spc: Option<Switch>,
    #[arg(long)]
    pub terminal_dc: Option<Switch>,
    /// Task mask kind: random (centre block plus random columns) or snapped
    #[arg(long)]
    pub mask_kind: Option<MaskKindArg>,
    #[arg(long)]
    pub center_fraction: Option<f64>,
    /// Start sweep A..B for the start-step ablation
    #[arg(long)]
    pub sweep_start: Option<StartRange>,
    #[arg(long)]
    pub sweep_step: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReconArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub restorer: RestorerArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Ground-truth image (CIM1); measurements are synthesized from it
    #[arg(long)]
    pub input: Option<String>,
    /// External task mask (KMS1) instead of a generated one
    #[arg(long)]
    pub mask: Option<String>,
    #[arg(long)]
    pub af: Option<f64>,
    /// Start step override
    #[arg(long)]
    pub start: Option<usize>,
    /// Save x_{t-1} after every step
    #[arg(long)]
    pub trajectory: bool,
    /// Re-check measured-data preservation and oracle recovery
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub pgm: bool,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub restorer: RestorerArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long)]
    pub data: Option<String>,
    /// Acceleration factors, comma-separated
    #[arg(long)]
    pub af: Option<List<f64>>,
    /// Schedule kinds, comma-separated
    #[arg(long)]
    pub kinds: Option<List<ScheduleKind>>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKindArg {
    Random,
    Snapped,
}

impl std::str::FromStr for MaskKindArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(MaskKindArg::Random),
            "snapped" => Ok(MaskKindArg::Snapped),
            other => Err(format!("expected random or snapped, got '{other}'")),
        }
    }
}

impl std::fmt::Display for MaskKindArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MaskKindArg::Random => "random",
            MaskKindArg::Snapped => "snapped",
        })
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
