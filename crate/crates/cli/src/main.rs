use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ccd_cli::{cmd_check, cmd_run, cmd_sweep, Options, EXIT_ERROR};

/// Cyclic block coordinate descent experiments and bound checks.
///
/// Exit status: 0 all checks pass, 1 a Monte Carlo check failed after
/// escalation, 2 a deterministic bound was violated, 3 configuration or
/// runtime error.
#[derive(Parser)]
#[command(name = "ccd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base seed (overrides seeds.base, or seeds a check suite).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for traces and reports.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Run a built-in acceptance suite by name or number, or `all`.
    Check { suite: String },
    /// Rerun a config once per value of a numeric key.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        pool = pool.num_threads(jobs);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let opts = Options { seed: cli.seed, out_dir: cli.out_dir };
    let result = pool.install(|| match &cli.command {
        Command::Run { config } => cmd_run(config, &opts),
        Command::Check { suite } => cmd_check(suite, &opts),
        Command::Sweep { config, axis, values } => cmd_sweep(config, axis, values, &opts),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
