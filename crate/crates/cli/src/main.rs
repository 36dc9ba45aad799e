use std::path::PathBuf;
use std::process::ExitCode;

use causal_pat_cli::commands::{
    output_dir, run_reconstruct, run_simulate, run_sweep, run_thresholds, run_verify_identity,
    RunOptions,
};
use causal_pat_cli::{parse_config, CliError, CliResult, RunConfig};
use clap::{Args, Parser, Subcommand};

/// Photoacoustic time-reversal reconstruction in attenuating media.
#[derive(Parser)]
#[command(name = "causal-pat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize attenuated boundary data and write dataset.csv.
    Simulate(Common),
    /// Reconstruct the initial pressure from a dataset and write image.csv.
    Reconstruct(Common),
    /// Reconstruct at every cutoff in `sweep_rhos` and write sweep.csv.
    Sweep(Common),
    /// Print the stability threshold and front speed of the model.
    Thresholds(Common),
    /// Check the convergence order of the corrected composition identity.
    VerifyIdentity(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Imaging cutoff that may exceed the stability threshold.
    #[arg(long)]
    override_rho: Option<f64>,
}

type Runner = fn(&RunConfig, &RunOptions) -> CliResult<()>;

fn execute(common: &Common, runner: Runner) -> CliResult<()> {
    let cfg = parse_config(&common.config)?;
    let opts = RunOptions {
        output_dir: output_dir(common.output_dir.as_deref()),
        override_rho: common.override_rho,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config {
                path: common.config.clone(),
                message: "--threads must be >= 1".into(),
            });
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Config {
        path: common.config.clone(),
        message: format!("cannot start worker pool: {e}"),
    })?;
    pool.install(|| runner(&cfg, &opts))
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let (common, runner): (&Common, Runner) = match &cli.command {
        Command::Simulate(c) => (c, run_simulate),
        Command::Reconstruct(c) => (c, run_reconstruct),
        Command::Sweep(c) => (c, run_sweep),
        Command::Thresholds(c) => (c, run_thresholds),
        Command::VerifyIdentity(c) => (c, run_verify_identity),
    };
    match execute(common, runner) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
