//! `muxdt` command-line front end: DTF curve sweeps, rate solves, figure
//! datasets and a distribution self-check, emitted as CSV or JSON.

pub mod args;
pub mod check;
pub mod config;
pub mod error;
pub mod figures;
pub mod sweep;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;
use crate::sweep::{
    parse_bracket, rate_row, solve_rates, Curve, RunSettings, System, RATE_COLUMNS,
};
use crate::table::{Report, Table};

pub use crate::error::CliError as Error;

/// Parses `args` (including the binary name), runs the command and writes
/// its output to `--output` or `stdout`.
pub fn run(args: Vec<OsString>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let args = config::expand_args(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            write!(stdout, "{}", e.render())?;
            return Ok(());
        }
        Err(e) => return Err(CliError::usage(e.render().to_string().trim_end())),
    };

    match cli.command {
        Command::DtfCurve(a) => {
            let settings = RunSettings::from_args(&a.run)?;
            let system = System::from_args(&a.system)?;
            let grid: sweep::Grid = a.grid.parse()?;
            let curves = [Curve {
                system,
                xs: grid.values(),
            }];
            let table = sweep::curve_table(&curves, &settings)?;
            emit(
                &Report::single("dtf", table),
                a.run.json,
                a.run.output.as_deref(),
                stdout,
            )
        }
        Command::RateAtDtf(a) => {
            let settings = RunSettings::from_args(&a.run)?;
            let kind = settings.single_engine()?;
            let system = System::from_args(&a.system)?;
            let bracket = a.bracket.as_deref().map(parse_bracket).transpose()?;
            let mut systems = vec![system.clone()];
            if system.n != 1 {
                systems.push(system.with_detectors(1));
            }
            let solved = solve_rates(&systems, a.target, bracket, kind, &settings, false)?;
            let base = solved.last().map_or(f64::NAN, |s| s.rate);
            let mut table = Table::new(&RATE_COLUMNS);
            table.push(rate_row(&system, a.target, solved[0], base));
            emit(
                &Report::single("rate", table),
                a.run.json,
                a.run.output.as_deref(),
                stdout,
            )
        }
        Command::Figure(a) => {
            let settings = RunSettings::from_args(&a.run)?;
            let report = figures::figure(&a.name, a.target, &settings)?;
            emit(&report, a.run.json, a.run.output.as_deref(), stdout)
        }
        Command::DistCheck(a) => {
            let report = check::dist_check(a.inject_fault)?;
            emit(&Report::single("check", report.table), a.json, None, stdout)?;
            if report.failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Check(report.failures.join("; ")))
            }
        }
    }
}

fn emit(
    report: &Report,
    json: bool,
    output: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let text = report.render(json);
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}
