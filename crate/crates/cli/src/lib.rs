//! Command-line front end: configuration, subcommands and the demo corpus.

pub mod commands;
pub mod config;
pub mod error;
pub mod toy;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::RunDir;
pub use config::{Config, Task};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "hof", version, about = "Hate/offensive/profane post classification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment configuration (flat `key = value` file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory holding the run's data, models and reports.
    #[arg(long, global = true, default_value = "run")]
    pub run_dir: PathBuf,

    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Load, clean, split, augment and oversample the corpus.
    Prepare,
    /// Train the denoiser and write synthetic examples.
    Augment,
    /// Train the binary ensemble and report validation scores.
    Train,
    /// Train the gate and the three pairwise models for fine-grained labels.
    #[command(name = "train-ovr")]
    TrainOvr,
    /// Write `id,label` predictions.
    Predict,
    /// Score predictions against gold labels.
    Evaluate,
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    let run = RunDir::new(&cli.run_dir);
    match cli.command {
        Command::Prepare => commands::prepare(&cfg, &run),
        Command::Augment => commands::augment_cmd(&cfg, &run),
        Command::Train => commands::train(&cfg, &run).map(drop),
        Command::TrainOvr => commands::train_ovr(&cfg, &run).map(drop),
        Command::Predict => commands::predict(&cfg, &run).map(drop),
        Command::Evaluate => commands::evaluate(&cfg, &run).map(drop),
    }
}
