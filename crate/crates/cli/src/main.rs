//! `appraise`: agreement analytics, cross-validated experiments and
//! gradient checks over appraisal-annotated emotion corpora.

mod args;
mod commands;
mod config;
mod exit;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use exit::Kind;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Kind::Usage.code() } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match &cli.command {
        Command::Agreement(a) => commands::agreement(a),
        Command::Run(a) => commands::run(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Synth(a) => commands::synth(a),
        Command::Folds(a) => commands::folds(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.kind.code()
        }
    }
}
