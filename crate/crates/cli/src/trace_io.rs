//! CSV trace files: `iter,objective,rel_err,gap,metric,wall_ms`, LF endings,
//! absent values as empty fields, reals in `{:.16e}` so they round-trip.

use std::io::{BufRead, Write};

use apdfp_core::solvers::Trace;

use crate::error::{CliError, CliResult};

pub const HEADER: &str = "iter,objective,rel_err,gap,metric,wall_ms";
pub const TIMING_HEADER: &str = "iter,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub rel_err: f64,
    pub gap: Option<f64>,
    pub metric: Option<f64>,
    pub wall_ms: Option<f64>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// Writes the trace; `wall_ms` stays blank unless `wall_clock` so that
/// re-runs are byte-identical.
pub fn write_trace<W: Write>(trace: &Trace, wall_clock: bool, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in trace.records() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iter,
            real(r.objective),
            real(r.rel_err),
            optional(r.gap),
            optional(r.metric),
            optional(wall_clock.then_some(r.wall_ms)),
        )?;
    }
    Ok(())
}

pub fn write_timing<W: Write>(trace: &Trace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TIMING_HEADER}")?;
    for r in trace.records() {
        writeln!(out, "{},{}", r.iter, real(r.wall_ms))?;
    }
    Ok(())
}

fn field(line_no: usize, name: &str, text: &str) -> CliResult<Option<f64>> {
    if text.is_empty() {
        return Ok(None);
    }
    text.parse()
        .map(Some)
        .map_err(|_| CliError::Input(format!("trace line {line_no}: bad {name} '{text}'")))
}

fn required(line_no: usize, name: &str, text: &str) -> CliResult<f64> {
    field(line_no, name, text)?
        .ok_or_else(|| CliError::Input(format!("trace line {line_no}: missing {name}")))
}

pub fn read_trace<R: BufRead>(reader: R) -> CliResult<Vec<TraceRow>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| CliError::Input(e.to_string()))?
        .ok_or_else(|| CliError::Input("empty trace file".into()))?;
    if header != HEADER {
        return Err(CliError::Input(format!(
            "unexpected trace header '{header}'"
        )));
    }
    let mut rows: Vec<TraceRow> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| CliError::Input(e.to_string()))?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(CliError::Input(format!(
                "trace line {line_no}: expected 6 fields, got {}",
                cols.len()
            )));
        }
        let iter = cols[0].parse().map_err(|_| {
            CliError::Input(format!("trace line {line_no}: bad iteration '{}'", cols[0]))
        })?;
        if rows.last().is_some_and(|r| r.iter >= iter) {
            return Err(CliError::Input(format!(
                "trace line {line_no}: iterations must increase"
            )));
        }
        rows.push(TraceRow {
            iter,
            objective: required(line_no, "objective", cols[1])?,
            rel_err: required(line_no, "rel_err", cols[2])?,
            gap: field(line_no, "gap", cols[3])?,
            metric: field(line_no, "metric", cols[4])?,
            wall_ms: field(line_no, "wall_ms", cols[5])?,
        });
    }
    Ok(rows)
}
