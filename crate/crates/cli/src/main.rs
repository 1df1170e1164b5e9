//! Command-line front end: analyze a saddle, sample exits, compare them with
//! the limit law, sweep the noise level, and run the reduced acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use saddle_exit::ErrorFamily;

use commands::Context;
use config::ExperimentConfig;

/// Exit code 5: `verify` ran but at least one check failed.
const VERIFY_FAILED: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<saddle_exit::Error> for CliError {
    fn from(e: saddle_exit::Error) -> Self {
        let code = match e.family() {
            ErrorFamily::Input => 1,
            ErrorFamily::Spectral => 2,
            ErrorFamily::Geometry => 3,
            ErrorFamily::Convergence => 4,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "saddle-exit", version, about = "Small-noise exit asymptotics near a hyperbolic saddle")]
struct Cli {
    /// Experiment TOML; the built-in linear saddle when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo batches. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true, env = "SADDLE_EXIT_OUT_DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Spectral data, h±, σ and the limit CDF as JSON.
    Analyze,
    /// Exit samples at `eps` as CSV.
    Sample,
    /// Compare samples (from `samples` or an inline batch) with the limit law.
    Compare,
    /// Comparison metrics over `eps_list` as CSV.
    Convergence,
    /// Reduced acceptance checks; exit code 5 on failure.
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::input("--threads: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::input(format!("--threads: {e}")))?;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let ctx = Context { config, out_dir };
    // The resolved config (seed override included) travels with the outputs.
    ctx.write("config.toml", &ctx.config.to_toml())?;
    let path = match cli.command {
        Command::Analyze => commands::analyze_cmd(&ctx)?,
        Command::Sample => commands::sample_cmd(&ctx)?,
        Command::Compare => commands::compare_cmd(&ctx)?,
        Command::Convergence => commands::convergence_cmd(&ctx)?,
        Command::Verify => {
            let (path, pass) = commands::verify_cmd(&ctx)?;
            println!("{}", path.display());
            if !pass {
                return Err(CliError { code: VERIFY_FAILED, message: "verification failed".into() });
            }
            return Ok(());
        }
    };
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
