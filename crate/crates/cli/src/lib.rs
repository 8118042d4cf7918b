//! Command-line front end: parses flags and experiment files, runs one
//! command and prints a JSON report.

pub mod acceptance;
pub mod args;
pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::Parser;

pub use args::{Cli, Command, Flags};
pub use report::{Entry, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sublinear::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                sublinear::Error::Contract(_) | sublinear::Error::NonConvergence { .. },
            ) => 2,
            _ => 1,
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;

/// Resolves the inputs and runs the command. Writes the CSV file when an
/// output path is set.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let start = Instant::now();
    let resolved = config::resolve(cli.command, &cli.flags)?;
    let mut report = commands::dispatch(&resolved)?;
    if let Some(path) = &resolved.out {
        std::fs::write(path, report.csv_text())?;
    }
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Entry point of the binary; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            // a closed pipe is not worth a panic
            let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json_string());
            if report.pass() {
                EXIT_PASS
            } else {
                EXIT_CONTRACT
            }
        }
        Err(e) => {
            eprintln!("sublinear {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
