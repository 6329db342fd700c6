mod args;
mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// 1 for usage and configuration problems, 2 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    use photocount::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Richardson { .. }
                | E::TrustRegion { .. }
                | E::Degenerate
                | E::GridTooLarge(_)
                | E::NoFluorescence
                | E::StepTooLarge(_)
                | E::AllCandidatesExcluded => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(jobs) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start {jobs} workers: {e}");
            return ExitCode::from(1);
        }
    }
    let global = cli.global;
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate::run(a, global),
        Command::Wtd(a) => commands::wtd::run(a, global),
        Command::Fisher(a) => commands::fisher::run(a, global),
        Command::Bayes(a) => commands::bayes::run(a, global),
        Command::Estimate(a) => commands::estimate::run(a, global),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
