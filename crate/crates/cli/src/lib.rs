//! The `forestconc` command line: argument types, graph files, and the
//! subcommands, each writing a human report and a CSV or JSON artifact.

pub mod args;
pub mod commands;
pub mod graph_file;

use std::io::{self, Write};

pub use args::Cli;
pub use graph_file::GraphFile;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] forestconc::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// A validation (bound dominance, pass fraction) failed.
    Fail,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }
}

/// Where a command writes. The artifact (CSV or JSON) goes to `--out` when
/// given and to `stdout` otherwise; the report then moves to `stderr`.
pub struct Sinks<'a> {
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

pub fn run(cli: &Cli, sinks: &mut Sinks<'_>) -> Result<Status, CliError> {
    use args::Command;
    if cli.workers == 0 {
        return Err(CliError::Usage("--workers must be >= 1".into()));
    }
    match &cli.command {
        Command::Complexity(a) => commands::complexity(cli, a, sinks),
        Command::Bound(a) => commands::bound(cli, a, sinks),
        Command::Simulate(a) => commands::simulate(cli, a, sinks),
        Command::Genbound(a) => commands::genbound(cli, a, sinks),
        Command::Gap(a) => commands::gap(cli, a, sinks),
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
