use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wsci::commands::{self, TrainPaths};
use wsci::report::print_lines;
use wsci::{ConfigArgs, Result};

#[derive(Debug, Parser)]
#[command(name = "wsci", version, about = "Semantic-VAE classifiers for noisy-labeled data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled feature file.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Fit the Gaussian-mixture codebook on region proposals of a feature file.
    FitGmm {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Build the visual-encoding semantic block for every category.
    Encode {
        #[arg(long)]
        features: PathBuf,
        /// Reuse a fitted codebook instead of fitting one.
        #[arg(long)]
        gmm: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train a model and write a checkpoint.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Semantic matrix files; their blocks are stacked in order.
        #[arg(long, required = true, num_args = 1..)]
        semantic: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Feature file for per-epoch held-out accuracy.
        #[arg(long)]
        heldout: Option<PathBuf>,
        /// Per-epoch metrics as JSON lines.
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict categories with a checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Rank instances by reconstruction weight, most typical first.
    Detect {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compare training modes across seeds.
    Ablate {
        #[arg(long = "out_dir")]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compare training modes across rank-ordered noise windows.
    Sweep {
        #[arg(long = "out_dir")]
        out_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(command: Command) -> Result<Vec<String>> {
    match command {
        Command::GenData { out, config } => commands::gen_data(&config.resolve()?, &out),
        Command::FitGmm { features, out, config } => commands::fit_gmm(&config.resolve()?, &features, &out),
        Command::Encode { features, gmm, out, config } => {
            commands::encode(&config.resolve()?, &features, gmm.as_deref(), &out)
        }
        Command::Train { features, semantic, out, heldout, metrics, config } => {
            let paths = TrainPaths {
                features: &features,
                semantic: &semantic,
                out: &out,
                heldout: heldout.as_deref(),
                metrics: metrics.as_deref(),
            };
            commands::train(&config.resolve()?, &paths)
        }
        Command::Predict { checkpoint, features, out, config } => {
            commands::predict(&config.resolve()?, &checkpoint, &features, &out)
        }
        Command::Detect { checkpoint, features, out, config } => {
            config.resolve()?;
            commands::detect(&checkpoint, &features, &out)
        }
        Command::Ablate { out_dir, config } => commands::ablate(&config.resolve()?, &out_dir),
        Command::Sweep { out_dir, config } => commands::sweep(&config.resolve()?, &out_dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(lines) => {
            print_lines(lines);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
