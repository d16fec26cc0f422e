//! `zsl`: command-line front end for zero-shot audio classification.
//!
//! Exit codes: 0 on success, 1 on I/O failure, 2 on invalid input or usage.

mod args;
mod commands;
mod error;
mod log;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too and are not failures.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error(&e.to_string());
            ExitCode::from(e.exit_code())
        }
    }
}
