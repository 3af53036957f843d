//! Command-line front end for constrained lasso solution paths on
//! compositional data.
//!
//! Every command is deterministic given its flags and seed; reruns produce
//! byte-identical files and output. The seed comes from `--seed`, falling
//! back to the `COMLASSO_SEED` environment variable, then 0.
//!
//! Exit codes: 0 success, 1 input error, 2 verification failure, 3 the path
//! was truncated before `lambda_min` (outputs are still written).

use clap::{Parser, Subcommand};
use comlasso::{commands, CvArgs, FitArgs, SimulateArgs, StabilityArgs, VerifyArgs};

#[derive(Parser)]
#[command(
    name = "comlasso",
    version,
    about = "Exact l1 solution paths under per-group linear equality constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the full solution path and write it out.
    Fit(FitArgs),
    /// Re-check a written path against the optimality conditions (and
    /// optionally an independent fixed-lambda solver).
    Verify(VerifyArgs),
    /// Cross-validate over the path's own lambda grid.
    Cv(CvArgs),
    /// Stability selection with randomized penalty weights.
    Stability(StabilityArgs),
    /// Generate synthetic compositional data with a known sparse truth.
    Simulate(SimulateArgs),
}

fn main() {
    // Rust turns SIGPIPE into a panic inside println!; restore the default
    // so `comlasso ... | head` dies quietly like any other unix tool.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => commands::run_fit(args),
        Command::Verify(args) => commands::run_verify(args),
        Command::Cv(args) => commands::run_cv(args),
        Command::Stability(args) => commands::run_stability(args),
        Command::Simulate(args) => commands::run_simulate(args),
    };
    let code = match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    };
    std::process::exit(code);
}
