//! Command-line front end: demo data, extraction runs, baseline
//! comparisons, gamma sweeps and MPS export driven by a TOML config.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_compare, cmd_demo, cmd_export_mps, cmd_extract, cmd_sweep, Summary, SweepRow};
pub use config::{Method, Overrides, RunConfig};
pub use error::CliError;
pub use report::{Aggregate, ComparisonReport, MeanStd, Row};

#[derive(Debug, Parser)]
#[command(name = "ordce", version, about = "Ordered counterfactual explanations for additive classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic credit dataset, its DAG, a trained model and a config.
    Demo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Candidate perturbations per feature, counting 0.
        #[arg(long, default_value_t = 6)]
        grid_size: usize,
        #[arg(long, default_value = "ordce-demo")]
        out: PathBuf,
    },
    /// Explain every rejected instance with the configured method.
    Extract {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run OrdCE and the greedy baseline on the same instances.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Mean costs over the corpus for an ascending list of gamma values.
    Sweep {
        config: PathBuf,
        /// Comma-separated; defaults to `gammas` from the config.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write each instance's optimisation model in MPS format.
    ExportMps {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Demo {
            seed,
            samples,
            grid_size,
            out,
        } => {
            let d = cmd_demo(seed, samples, grid_size, &out)?;
            println!(
                "training accuracy {:.3}, {} rejected rows; config at {}",
                d.accuracy,
                d.rejected,
                d.config.display()
            );
            Ok(())
        }
        Command::Extract { config, overrides } => cmd_extract(&RunConfig::load(&config, &overrides)?).map(drop),
        Command::Compare { config, overrides } => cmd_compare(&RunConfig::load(&config, &overrides)?).map(drop),
        Command::Sweep {
            config,
            gammas,
            overrides,
        } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let gammas = gammas.unwrap_or_else(|| cfg.gammas.clone());
            cmd_sweep(&cfg, &gammas).map(drop)
        }
        Command::ExportMps { config, overrides } => cmd_export_mps(&RunConfig::load(&config, &overrides)?).map(drop),
    }
}
