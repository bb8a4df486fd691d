//! Command line front end: config handling, experiment runs and output files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod image;
pub mod trace_io;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::Experiment;
use error::CliResult;

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let (experiment, run) = match cli.command {
        Command::CheckSchedule(a) => {
            let outcome = commands::run_check_schedule(a.lf, a.c, a.k, a.gamma)?;
            let _ = stdout.write_all(outcome.text.as_bytes());
            return Ok(if outcome.passed { 0 } else { 3 });
        }
        Command::Logreg(a) => (Experiment::Logreg, a),
        Command::Ct(a) => (Experiment::Ct, a),
        Command::Quad(a) => (Experiment::Quad, a),
    };
    let cfg = run.resolve(experiment)?;
    let report = commands::run_experiment(&cfg)?;
    let _ = stdout.write_all(report.summary.as_bytes());
    let _ = writeln!(stdout, "outputs written to {}", report.out.display());
    Ok(0)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
