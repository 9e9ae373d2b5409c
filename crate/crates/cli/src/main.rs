//! `dasbe` command line: dataset generation, DAE training, binding runs,
//! benchmark grids and score extraction. Every command snapshots its
//! effective config, seeds and input/output content hashes into a
//! manifest so runs can be reproduced bit for bit.

mod commands;
mod config;
mod error;
mod manifest;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "dasbe", version, about = "Spike-based temporal binding pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct Common {
    /// JSON config file; a previous run's manifest.json also works.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path config override, e.g. --set train.epochs=5. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Override the config's top-level seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset container file.
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Train a denoising autoencoder on single-object data.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Run the binding loop on images or a sequence.
    Bind {
        #[command(flatten)]
        common: Common,
        /// Binding variant.
        #[arg(long, value_parser = ["static", "hierarchical", "dynamic"])]
        mode: Option<String>,
        /// Emit PNG plots next to their backing CSVs.
        #[arg(long)]
        plots: bool,
    },
    /// Model x dataset AMI grid, Table-1 style.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Restrict to one model.
        #[arg(long, value_parser = ["dasbe", "folded", "pcnn"])]
        model: Option<String>,
    },
    /// Synchrony/rate evolution and score scatter across binding runs.
    Scores {
        #[command(flatten)]
        common: Common,
        /// Emit PNG plots next to their backing CSVs.
        #[arg(long)]
        plots: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common } => commands::gen::run(&common),
        Command::Train { common } => commands::train::run(&common),
        Command::Bind { common, mode, plots } => commands::bind::run(&common, mode.as_deref(), plots),
        Command::Benchmark { common, model } => commands::benchmark::run(&common, model.as_deref()),
        Command::Scores { common, plots } => commands::scores::run(&common, plots),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let err = CliError::validation(e.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
