//! `zib`: fit zero-inflated Bernoulli models to CSV data, draw prior and
//! posterior density grids, and run simulation studies.
//!
//! Exit codes: 0 success, 1 computation or output failure, 2 bad arguments
//! or config, 3 bad data, 4 sampler did not converge. Every failure prints a
//! single line starting with `error:` on stderr.

mod args;
mod commands;
mod data;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn threads(cmd: &Command) -> Option<usize> {
    match cmd {
        Command::Fit(a) => a.chains.threads,
        Command::Posterior(a) => a.threads,
        Command::Simulate(a) => a.chains.threads,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    match threads(&cli.command) {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => pool = pool.num_threads(n),
        None => {}
    }
    let pool = pool.build().map_err(|e| CliError::Compute(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Posterior(a) => commands::posterior(a),
        Command::Simulate(a) => commands::simulate(a),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap renders a usage block; keep only its first line.
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
