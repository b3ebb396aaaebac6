//! Command-line front end for `gibbsgap`.
//!
//! Every command reads JSON inputs, writes a JSON report (to `--output` or
//! stdout) and exits with 0 on success, 1 on input errors, 2 when the
//! requested quantity does not exist (infeasible budget, absolute-continuity
//! violation, enumeration cap) and 3 when `verify` finds a failing identity.

pub mod args;
pub mod commands;
pub mod error;
pub mod files;
pub mod report;

use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

use commands::Outcome;
use report::{to_json, Report};

/// Arguments after the program name with any `--output` value removed.
fn echo(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for arg in argv.iter().skip(1) {
        if skip {
            skip = false;
        } else if arg == "--output" {
            skip = true;
        } else if !arg.starts_with("--output=") {
            out.push(arg.clone());
        }
    }
    out
}

fn render<T: Serialize>(argv: &[String], outcome: CliResult<Outcome<T>>) -> CliResult<(String, Option<CliError>)> {
    let outcome = outcome?;
    let report = Report {
        command: echo(argv),
        inputs: outcome.inputs.into_digests(),
        result: outcome.result,
    };
    Ok((to_json(&report), outcome.failure))
}

/// Runs the command line `argv` (including the program name) and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let rendered = match &cli.command {
        Command::SolveBeta(a) => render(&argv, commands::solve_beta_cmd(a)),
        Command::Tilt(a) => render(&argv, commands::tilt_cmd(a)),
        Command::Decompose(a) => render(&argv, commands::decompose_cmd(a)),
        Command::Gap(a) => render(&argv, commands::gap_cmd(a)),
        Command::GibbsAudit(a) => render(&argv, commands::gibbs_audit_cmd(a)),
        Command::Verify(a) => render(&argv, commands::verify_cmd(a)),
    };
    let (text, failure) = match rendered {
        Ok(r) => r,
        Err(e) => {
            eprintln!("gibbsgap: error: {e}");
            return e.exit_code();
        }
    };
    let written = match cli.command.output() {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{path}: cannot write report: {e}")),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write report to stdout: {e}")),
    };
    if let Err(msg) = written {
        eprintln!("gibbsgap: error: {msg}");
        return 1;
    }
    match failure {
        Some(e) => {
            eprintln!("gibbsgap: verification failed: {e}");
            e.exit_code()
        }
        None => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_drops_output() {
        let argv: Vec<String> = [
            "gibbsgap",
            "verify",
            "--output",
            "r.json",
            "--trials",
            "3",
            "--output=x",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(echo(&argv), vec!["verify", "--trials", "3"]);
    }
}
