//! Command-line driver: synthetic data, preprocessing, training, evaluation and
//! window-width benchmarks.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use skillnet::data::Task;
use skillnet::eval::Scheme;

pub use config::{Labeling, Overrides, Preset, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "skillnet", version, about = "Surgical skill classification from robot kinematics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// su, np or kt.
    #[arg(long, global = true, value_parser = parse_task)]
    pub task: Option<Task>,
    /// loso or holdout.
    #[arg(long, global = true, value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
    /// Window width in frames.
    #[arg(long, global = true, value_name = "W")]
    pub window: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub labeling: Option<Labeling>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Folds trained concurrently.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Directory receiving every output file.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Dataset root holding manifest.csv (or a dataset release).
    #[arg(long, global = true, value_name = "DIR")]
    pub data: Option<PathBuf>,
}

impl GlobalArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            task: self.task,
            scheme: self.scheme,
            window: self.window,
            labeling: self.labeling,
            preset: self.preset,
            jobs: self.jobs,
            out: self.out.clone(),
            data: self.data.clone(),
        }
    }
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse().map_err(|e: skillnet::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: skillnet::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, normalize and crop every task; write crop caches and print counts.
    Preprocess,
    /// Write a synthetic corpus with a manifest to the output directory.
    Synth {
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        trials_per_subject: Option<usize>,
    },
    /// Train one model on every trial of the task and save a checkpoint.
    Train,
    /// Run the configured scheme and write fold and aggregate reports.
    Evaluate,
    /// Evaluate both schemes across window widths and tabulate the results.
    Benchmark {
        /// Comma-separated widths; defaults to the configured list.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<usize>>,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::resolve(cli.global.config.as_deref(), &cli.global.overrides())?;
    match cli.command {
        Command::Preprocess => commands::preprocess(&config),
        Command::Synth {
            subjects,
            trials_per_subject,
        } => {
            if let Some(s) = subjects {
                config.synth.subjects = s;
            }
            if let Some(t) = trials_per_subject {
                config.synth.trials_per_subject = t;
            }
            commands::synth(&config)
        }
        Command::Train => commands::train(&config),
        Command::Evaluate => commands::evaluate(&config),
        Command::Benchmark { windows } => {
            if let Some(w) = windows {
                config.eval.benchmark_windows = w;
            }
            commands::benchmark(&config)
        }
        Command::ShowConfig => {
            print!("{}", config.to_toml());
            Ok(())
        }
    }
}
