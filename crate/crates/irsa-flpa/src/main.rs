//! Finite-length packet-loss analysis for irregular repetition slotted ALOHA.
//!
//! Computes the packet-loss rate of an IRSA frame with k users and t slots
//! under successive interference cancellation, by exact occupancy-vector
//! enumeration, a most-likely-vectors cutoff, brute force, Monte Carlo
//! simulation, or the asymptotic density-evolution limit — singly or as a
//! sweep over user counts, with CSV/JSON export and mode comparison.
//!
//! Exit codes: 0 success, 2 malformed configuration, 3 budget-aborted sweep
//! (partial results are still written and flagged).

mod cli;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = cli::Args::parse();
    let resolved = match cli::resolve(args) {
        Ok(resolved) => resolved,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(2);
        }
    };
    match run::execute(&resolved) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
