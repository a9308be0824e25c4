//! Driver for the `sfw` binary: SMLM simulation, SFW reconstruction,
//! localization scoring and certificate export.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod certify;
pub mod config;
pub mod demo1d;
pub mod evaluate;
pub mod io;
pub mod reconstruct;
pub mod simulate;
pub mod trace;

pub use config::RunConfig;

/// Errors mapped onto the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{failed} of {total} frame files failed")]
    PartialFailure { failed: usize, total: usize },
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Dimension(_) => 3,
            CliError::PartialFailure { .. } => 4,
        }
    }
}

impl From<sfw_core::Error> for CliError {
    fn from(e: sfw_core::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "sfw", version, about = "Sliding Frank-Wolfe spike recovery and SMLM tooling")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a phantom, activation frames and noisy acquisitions.
    Simulate,
    /// Run SFW on every frame matched by a glob.
    Reconstruct {
        /// Frame files (default: `<out_dir>/frames/*.bin`).
        #[arg(long)]
        frames: Option<String>,
    },
    /// Score localizations against ground truth.
    Evaluate {
        /// Localization CSV (default: `<out_dir>/localizations.csv`)
        #[arg(long)]
        estimates: Option<PathBuf>,
        /// Ground-truth CSV (default: `<out_dir>/ground_truth.csv`)
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Export certificates.
    Certify {
        #[command(subcommand)]
        which: CertifyCommand,
    },
    /// One-dimensional Gaussian deconvolution demo.
    Demo1d(demo1d::DemoArgs),
}

#[derive(Debug, Subcommand)]
pub enum CertifyCommand {
    /// eta_W of the Laplace transform: closed form, continuous and sampled.
    Laplace(certify::LaplaceArgs),
    /// eta_V of a measure under the configured kernel.
    EtaV(EtaVArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EtaVArgs {
    /// Localization CSV holding the measure (all rows are used).
    #[arg(long)]
    pub measure: Option<PathBuf>,
    /// Lateral samples per axis of the exported slices.
    #[arg(long)]
    pub resolution: Option<usize>,
}

/// Effective configuration after command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Other(e.into()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = effective_config(&cli)?;
    if cli.dump_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given (see --help)".into()));
    };
    std::fs::create_dir_all(&cfg.out_dir)?;
    let pool = thread_pool(cli.threads)?;
    match command {
        Command::Simulate => simulate::run(&cfg, &pool).map(|_| ()),
        Command::Reconstruct { frames } => reconstruct::run(&cfg, frames.as_deref(), &pool).map(|_| ()),
        Command::Evaluate { estimates, ground_truth } => {
            evaluate::run(&cfg, estimates.as_deref(), ground_truth.as_deref()).map(|_| ())
        }
        Command::Certify { which: CertifyCommand::Laplace(args) } => certify::laplace(&cfg, &args).map(|_| ()),
        Command::Certify { which: CertifyCommand::EtaV(args) } => certify::eta_v(&cfg, &args).map(|_| ()),
        Command::Demo1d(args) => demo1d::run(&cfg, &args).map(|_| ()),
    }
}
