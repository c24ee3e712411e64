mod args;
mod commands;
mod output;
mod verify;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;
use kfree_core::Error;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// An identity or inequality did not hold.
    Assertion(String),
    Usage(String),
    /// Sieve too small, cutoff cap, unreachable target and the like.
    Resource(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Assertion(m) | CliError::Usage(m) | CliError::Resource(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::OutOfRange { .. } | Error::InvalidArgument(_) | Error::TooFewPoints { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Resource(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Resource(format!("cannot start thread pool: {e}")))?;
    }
    let env = commands::Env {
        sieve_limit: cli.sieve_limit,
        format: cli.format,
    };
    let outcome = match &cli.command {
        Command::Constants(a) => commands::constants(&env, a),
        Command::Intensity(a) => commands::intensity(&env, a),
        Command::Scan(a) => commands::scan(&env, a),
        Command::Walfisz(a) => commands::walfisz(&env, a),
        Command::Weighted(a) => commands::weighted(&env, a),
        Command::Decay(a) => commands::decay(&env, a),
        Command::Verify(a) => verify::run(&env, a),
    };
    // a failed verification still writes its report
    let (text, failure) = match outcome {
        Ok(text) => (Some(text), None),
        Err(commands::Failed { report, error }) => (report, Some(error)),
    };
    if let Some(text) = text {
        output::emit(&text, cli.output.as_deref())
            .map_err(|e| CliError::Resource(format!("cannot write output: {e}")))?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
