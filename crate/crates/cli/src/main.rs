mod args;
mod commands;
mod scene_io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Marks an error as a misuse of the command line (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<phasemask::Error>() {
            return match e {
                phasemask::Error::InvalidArgument(_) | phasemask::Error::Shape(_) => EXIT_USAGE,
                phasemask::Error::Numerical(_) => EXIT_NUMERICAL,
                phasemask::Error::Data { .. } | phasemask::Error::Checkpoint(_) | phasemask::Error::Io(_) => {
                    EXIT_DATA
                }
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let seed = cli.seed;
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a, seed),
        Command::Train(a) => commands::train(a, seed),
        Command::Separate(a) => commands::separate(a, seed),
        Command::Beamform(a) => commands::beamform(a, seed),
        Command::Evaluate(a) => commands::evaluate(a, seed),
        Command::Rank(a) => commands::rank(a, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
