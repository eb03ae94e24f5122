mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use isophote::Error;

use args::{Cli, Command};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

/// Short class label and exit code for a library error.
fn classify(e: &Error) -> (&'static str, u8) {
    match e {
        Error::NotFound(_) | Error::Io { .. } => ("i/o", EXIT_IO),
        Error::UnsupportedFormat { .. } | Error::Corrupt { .. } => ("decode", EXIT_IO),
        Error::Serialize(_) => ("output", EXIT_IO),
        Error::DimensionMismatch { .. } => ("dimension mismatch", EXIT_USAGE),
        Error::FullMask => ("full mask", EXIT_USAGE),
        Error::InvalidParameter(_) => ("invalid parameter", EXIT_USAGE),
        Error::Divergence { .. } => ("divergence", EXIT_DIVERGENCE),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match &cli.command {
        Command::Inpaint(a) => commands::inpaint(a),
        Command::Denoise(a) => commands::denoise(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Bench(a) => commands::bench(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (class, code) = classify(&e);
            eprintln!("error ({class}): {e}");
            ExitCode::from(code)
        }
    }
}
