//! Command-line front end for the `mixphase` simulator.
//!
//! Subcommands: `simulate` writes η-sweep (and optionally analyzer) CSV
//! traces, `extract` inverts a trace into cos²Φ and visibility, `theory`
//! evaluates the closed forms (optionally for a geodesic path), and `fullrun`
//! chains simulation, blind extraction and comparison with theory.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 inconsistent data,
//! 4 tolerance regression.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "mixphase", version, about = "Mixed-state relative phase in SU(2) polarimetry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the flipper phase η and write the intensity trace as CSV.
    Simulate(commands::SimulateArgs),
    /// Extract cos²Φ and visibility from a trace.
    Extract(commands::ExtractArgs),
    /// Evaluate closed-form phases and visibilities.
    Theory(commands::TheoryArgs),
    /// Simulate both sweeps, extract blind, and compare with theory.
    Fullrun(commands::FullrunArgs),
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Io(e.to_string()))
}

/// What a subcommand produced: text for standard output and, on failure,
/// the error deciding the exit code. A failed `fullrun` still carries its
/// report.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub error: Option<CliError>,
}

impl From<Result<String, CliError>> for Outcome {
    fn from(r: Result<String, CliError>) -> Self {
        match r {
            Ok(stdout) => Outcome { stdout, error: None },
            Err(e) => Outcome {
                stdout: String::new(),
                error: Some(e),
            },
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Simulate(args) => commands::simulate(args).and_then(|s| to_json(&s)).into(),
        Command::Extract(args) => commands::extract(args).and_then(|s| to_json(&s)).into(),
        Command::Theory(args) => commands::theory(args).and_then(|s| to_json(&s)).into(),
        Command::Fullrun(args) => run_fullrun(args),
    }
}

fn run_fullrun(args: &commands::FullrunArgs) -> Outcome {
    let emitted = commands::fullrun(args).and_then(|report| {
        let json = to_json(&report)?;
        let stdout = match &args.out {
            Some(path) => {
                io::write_atomic(path, json.as_bytes())?;
                String::new()
            }
            None => json,
        };
        Ok((report, stdout))
    });
    match emitted {
        Err(e) => Outcome {
            stdout: String::new(),
            error: Some(e),
        },
        Ok((report, stdout)) => {
            let error = (!report.within_tol).then(|| {
                CliError::Regression(format!(
                    "max discrepancy {:e} exceeds tolerance {:e}",
                    report.discrepancy.max, args.tol
                ))
            });
            Outcome { stdout, error }
        }
    }
}
