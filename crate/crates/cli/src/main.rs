//! `segfix` command-line front-end.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags or flag
//! combinations), 2 for data errors (unreadable or mismatched inputs).
//! Human-readable summaries go to stdout, diagnostics to stderr
//! (verbosity via the `SEGFIX_LOG` environment variable), and every
//! subcommand can write a machine-readable JSON report with `--out`.

mod args;
mod commands;
mod runner;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::runner::CliError;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SEGFIX_LOG")).init();
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };

    let result = match cli.command {
        Command::GenGt(args) => commands::gen_gt::run(args),
        Command::Refine(args) => commands::refine::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Histogram(args) => commands::histogram::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::OracleExp(args) => commands::oracle::run(args),
        Command::Stats(args) => commands::stats::run(args),
    };

    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("data error: {msg}");
            2
        }
    }
}
