mod args;
mod commands;
mod svg;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;
use sieve_roc::{Error, ErrorKind};

use args::{Cli, Command};

const THREADS_VAR: &str = "SIEVE_ROC_THREADS";

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{THREADS_VAR} must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("cannot size worker pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), Error> {
    configure_threads()?;
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Roc(a) => commands::roc(a),
        Command::Auc(a) => commands::auc(a),
        Command::Ci(a) => commands::ci(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::ReplicateTable1(a) => commands::replicate_table(a),
        Command::Histogram(a) => commands::histogram(a),
    }
}

fn one_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap's report runs until its usage section; keep only the message
            let text = e.to_string();
            let message = text.split("\n\n").next().unwrap_or_default();
            let message = message.strip_prefix("error: ").unwrap_or(message);
            eprintln!("error: usage: {}", one_line(message));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, status) = match e.kind() {
                ErrorKind::Usage => ("usage", 2),
                ErrorKind::Data => ("data", 3),
                ErrorKind::Convergence => ("convergence", 4),
            };
            eprintln!("error: {code}: {}", one_line(&e.to_string()));
            ExitCode::from(status)
        }
    }
}
