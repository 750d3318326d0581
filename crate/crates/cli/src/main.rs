//! `glvortex`: a laboratory for coupled vortex fields on the unit square.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure (non-convergence
//! or an aborted sweep). Partial outputs are still written on exit 2.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::Overrides;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "glvortex", version, about = "Coupled vortex-field experiments on the unit square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the coupled energy at a single coupling value.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Coupling value; defaults to the first sweep entry.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Exact run directory (default: timestamped subdirectory of output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-iteration trace CSVs.
        #[arg(long)]
        trace: bool,
        /// Overrides solver.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep a decreasing coupling schedule with warm starts and full diagnostics.
    Continue {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the constrained limit problem and report alpha, beta, and lambda_1.
    AlphaBeta {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Single-component sweep: energy growth against log(1/eps).
    Baseline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the fast built-in invariant suite.
    Check,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve { config, epsilon, out, trace, seed } => {
            commands::cmd_solve(&config, &Overrides { epsilon, out, trace, seed })
        }
        Command::Continue { config, out, trace, seed } => {
            commands::cmd_continue(&config, &Overrides { out, trace, seed, ..Overrides::default() })
        }
        Command::AlphaBeta { config, out, seed } => {
            commands::cmd_alpha_beta(&config, &Overrides { out, seed, ..Overrides::default() })
        }
        Command::Baseline { config, out, trace, seed } => {
            commands::cmd_baseline(&config, &Overrides { out, trace, seed, ..Overrides::default() })
        }
        Command::Check => Ok(commands::cmd_check()),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
