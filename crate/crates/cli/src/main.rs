mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use commands::Verdict;
use config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.validate() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match commands::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if !outcome.output.is_empty() {
        let written = match &cfg.out {
            Some(path) => std::fs::write(path, &outcome.output),
            None => std::io::stdout().lock().write_all(outcome.output.as_bytes()),
        };
        if let Err(e) = written {
            eprintln!("error: cannot write output: {e}");
            return ExitCode::from(2);
        }
    }
    match outcome.verdict {
        Verdict::Ok => ExitCode::SUCCESS,
        Verdict::Negative(msg) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
