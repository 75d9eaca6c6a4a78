//! `qcd`: run quickest-change-diagnosis experiments from a JSON config.
//!
//! Subcommands: `verify` writes a robustness certificate, `calibrate` picks
//! thresholds for a false-metric target, `delay` and `false` tabulate the
//! two performance metrics, `figure` writes per-change-type delay sweeps.
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod report;

use config::ExperimentConfig;
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "qcd", version, about = "Quickest change diagnosis experiments")]
struct Cli {
    /// Experiment configuration file (JSON)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the configured master seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured Monte Carlo run count
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Output directory (defaults to the config's output path, then ".")
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for Monte Carlo runs (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configured model and write certificate.json
    Verify,
    /// Pick per-algorithm thresholds and write calibration.json
    Calibrate,
    /// Estimate detection/isolation delays over the sweep grid
    Delay,
    /// Estimate mean times to false alarm or false isolation
    False,
    /// Write per-change-type delay sweep CSVs
    Figure,
}

fn run(cli: Cli) -> Result<i32> {
    let config_path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <FILE> is required".into()))?;
    let mut cfg = ExperimentConfig::load(&config_path)?;
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(runs) = cli.runs {
        if runs < 2 {
            return Err(CliError::Config("--runs must be at least 2".into()));
        }
        cfg.runs = runs;
    }
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }

    let out_dir = cli
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;

    match cli.command {
        Command::Verify => commands::cmd_verify(&cfg, &out_dir),
        Command::Calibrate => commands::cmd_calibrate(&cfg, &out_dir),
        Command::Delay => commands::cmd_delay(&cfg, &out_dir),
        Command::False => commands::cmd_false(&cfg, &out_dir),
        Command::Figure => commands::cmd_figure(&cfg, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
