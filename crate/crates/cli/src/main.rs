//! Batch front-end: parse a configuration, run one of the five analysis
//! commands, emit plot-ready tabular data.
//!
//! Exit codes: 0 success, 2 configuration error, 3 precondition refusal,
//! 4 internal invariant failure.

mod commands;
mod output;

use clap::{Parser, Subcommand};

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "qcsync",
    about = "Simulation and analysis of entanglement-purified quantum clock synchronization",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid-scan (p, φ): closed-form vs numerical twirl residuals.
    TwirlCheck(commands::twirl_check::Args),
    /// Analytic and/or Monte Carlo purification trajectories.
    Purify(commands::purify::Args),
    /// Repeated clock-offset estimation trials.
    Qcs(commands::qcs::Args),
    /// Error-budget curves over purification round counts.
    Budget(commands::budget::Args),
    /// One end-to-end scenario with full report and message log.
    E2e(commands::e2e::Args),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TwirlCheck(args) => commands::twirl_check::run(args),
        Command::Purify(args) => commands::purify::run(args),
        Command::Qcs(args) => commands::qcs::run(args),
        Command::Budget(args) => commands::budget::run(args),
        Command::E2e(args) => commands::e2e::run(args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(match err {
                CliError::Config(_) => 2,
                CliError::Refusal(_) => 3,
                CliError::Internal(_) => 4,
            });
        }
    }
}
