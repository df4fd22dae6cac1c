//! `hierlyap`: certify and simulate interconnected nonlinear networks.
//!
//! Exit codes are a stable contract: 0 certified/success, 1 not certified,
//! 2 parse or usage error, 3 assumption violation, 4 divergence.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "hierlyap",
    version,
    about = "Certify and simulate interconnected nonlinear networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the certification pipeline on a network config
    Assess {
        /// Network config file
        config: PathBuf,
        /// Certify against worst-case coupling bounds instead of the
        /// declared weights
        #[arg(long)]
        robust: bool,
        /// Initial state: comma-separated numbers, or a path to a file
        /// holding a numeric array (falls back to the config's
        /// initial_state)
        #[arg(long)]
        x0: Option<String>,
        /// Write the machine-readable report here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the dynamics and emit a plot-ready CSV trajectory
    Simulate {
        /// Network config file
        config: PathBuf,
        /// Initial state: inline numbers or a file path (falls back to the
        /// config's initial_state)
        #[arg(long)]
        x0: Option<String>,
        /// Final time (default 5)
        #[arg(long)]
        t_end: Option<f64>,
        /// Step size (default 1e-3)
        #[arg(long)]
        dt: Option<f64>,
        /// Write the trajectory here
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Certify first and append the storage sum as a V column
        #[arg(long)]
        with_certificate: bool,
    },
    /// Regenerate the built-in 20-block ring example end to end
    ReproduceExample {
        /// Directory for config.json, report.json, and trajectory.csv
        #[arg(long)]
        out_dir: PathBuf,
        /// Remove the coupling with this index before assessing
        #[arg(long)]
        drop_link: Option<usize>,
    },
    /// Re-assess the network under permanent coupling removals
    Resilience {
        /// Network config file
        config: PathBuf,
        /// Sweep every single-coupling removal
        #[arg(long, conflicts_with = "subsets")]
        single_links: bool,
        /// Path to a JSON list of coupling-index lists
        #[arg(long)]
        subsets: Option<PathBuf>,
        /// Certify against worst-case coupling bounds
        #[arg(long)]
        robust: bool,
        /// Write the verdicts here as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Assess {
            config,
            robust,
            x0,
            out,
        } => commands::cmd_assess(&config, robust, x0.as_deref(), out.as_deref()),
        Command::Simulate {
            config,
            x0,
            t_end,
            dt,
            csv,
            with_certificate,
        } => commands::cmd_simulate(
            &config,
            x0.as_deref(),
            t_end,
            dt,
            csv.as_deref(),
            with_certificate,
        ),
        Command::ReproduceExample { out_dir, drop_link } => {
            commands::cmd_reproduce_example(&out_dir, drop_link)
        }
        Command::Resilience {
            config,
            single_links,
            subsets,
            robust,
            out,
        } => commands::cmd_resilience(
            &config,
            single_links,
            subsets.as_deref(),
            robust,
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
