//! Command-line driver for the crossbar PMM simulator.
//!
//! Subcommands cover oracle verification, single end-to-end runs, grid
//! sweeps, mapping-style comparison, the paired noise study, and mapping
//! plan inspection. Every command is deterministic given its configured
//! seed, and every report echoes the fully resolved configuration.
//!
//! Exit codes: 0 on success, 1 when verification finds a mismatch, 2 for
//! usage or configuration errors.

mod commands;
mod config;
mod output;

use std::fmt;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "xbar-pmm",
    version,
    about = "Crossbar compute-in-memory simulator for polynomial modular multiplication"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-check every simulated path against its software oracle.
    Verify(commands::verify::VerifyArgs),
    /// Simulate one polynomial modular multiplication end to end.
    Run(commands::run::RunArgs),
    /// Evaluate a degree x bitwidth x mode grid structurally.
    Sweep(commands::sweep::SweepArgs),
    /// Ratio table between the two mapping styles at one design point.
    CompareMapping(commands::compare::CompareArgs),
    /// Paired noise comparison of the Conv1D and NTT crossbar routes.
    NoiseStudy(commands::noise::NoiseArgs),
    /// Print the weight-to-array mapping plan.
    DumpPlan(commands::plan::PlanArgs),
}

/// Driver-level failure; always maps to exit code 2.
#[derive(Debug)]
pub struct CliError(String);

impl CliError {
    pub fn config(message: String) -> Self {
        CliError(message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<xbar_pmm::Error> for CliError {
    fn from(e: xbar_pmm::Error) -> Self {
        CliError(e.to_string())
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Verify(args) => commands::verify::exec(args),
        Command::Run(args) => commands::run::exec(args),
        Command::Sweep(args) => commands::sweep::exec(args),
        Command::CompareMapping(args) => commands::compare::exec(args),
        Command::NoiseStudy(args) => commands::noise::exec(args),
        Command::DumpPlan(args) => commands::plan::exec(args),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}
