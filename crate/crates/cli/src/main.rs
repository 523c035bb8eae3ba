mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Usage = 1,
    VerifyFailed = 2,
    Runtime = 3,
}

/// Raised by `verify` when at least one check fails.
#[derive(Debug)]
pub struct VerifyFailed(pub Vec<String>);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed: {}", self.0.len(), self.0.join(", "))
    }
}

impl std::error::Error for VerifyFailed {}

/// Error raised for bad command-line input that clap itself cannot catch.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn classify(err: &anyhow::Error) -> Status {
    if err.is::<VerifyFailed>() {
        return Status::VerifyFailed;
    }
    if err.is::<UsageError>() {
        return Status::Usage;
    }
    match err.downcast_ref::<aptx_core::Error>() {
        Some(
            aptx_core::Error::Config(_)
            | aptx_core::Error::Domain(_)
            | aptx_core::Error::Element { .. },
        ) => Status::Usage,
        _ => Status::Runtime,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Status::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err) as u8)
        }
    }
}
