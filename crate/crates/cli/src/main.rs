use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod artifacts;
mod cache;
mod commands;
mod config;
mod error;
mod observables;

use crate::cache::EigenCache;
use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::CliError;

/// Exact correlators of chaotic spin chains and random-matrix models,
/// compared with their decay-kernel predictions.
#[derive(Parser)]
#[command(name = "chaoscorr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact series under the full and the non-interacting Hamiltonian.
    Simulate(Common),
    /// Exact series against Lorentzian and Gaussian predictions.
    Compare(Common),
    /// Deutsch-ensemble linewidth and eigenvector-correlation checks.
    RmtVerify(Common),
    /// Extract and fit the chaotic wave-function profile.
    FitLambda(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config (default `output`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Eigendecomposition cache; without one nothing is cached.
    #[arg(long, env = "CHAOSCORR_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for data-parallel loops.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write downsampled copies of long tables under `plot/`.
    #[arg(long)]
    emit_plot_data: bool,
}

fn configure_threads(n: Option<usize>) -> Result<(), CliError> {
    let Some(n) = n else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        log::warn!("built without the `parallel` feature; --threads {n} is ignored");
    }
    Ok(())
}

fn context(args: Common) -> Result<Context, CliError> {
    configure_threads(args.threads)?;
    let cfg = RunConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let output_dir = args.output_dir.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("output"));
    let cache = EigenCache::new(args.cache_dir.or_else(|| cfg.cache_dir.clone()));
    Ok(Context { cfg, seed, output_dir, cache, emit_plot_data: args.emit_plot_data })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&context(a)?),
        Command::Compare(a) => commands::compare(&context(a)?),
        Command::RmtVerify(a) => commands::rmt_verify(&context(a)?),
        Command::FitLambda(a) => commands::fit_lambda(&context(a)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
