//! `gyrosecret` command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 malformed input, 5 pipeline,
//! 6 crypto or carrier.

mod commands;
mod failure;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = commands::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::from(failure::code::OK),
        Err(f) => {
            eprintln!("gyrosecret: {f}");
            ExitCode::from(f.code)
        }
    }
}
