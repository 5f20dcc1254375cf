//! CSV emission of experiment results.
//!
//! The format is the data contract of the harness: a fixed header,
//! one row per (strategy, SNR) cell in strategy-list order then ascending
//! SNR, floats printed with 12 significant digits, newline-terminated.

use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

use super::config::Strategy;
use super::experiment::ExperimentResult;

pub const CSV_HEADER: &str = "strategy,snr_db,mean_sum_se,std_sum_se,trials,mean_build_seconds";

/// Format a float with 12 significant digits, round-trippable through
/// `f64::from_str`.
fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

/// Write the result as CSV to any writer.
pub fn write_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for cell in &result.cells {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            cell.strategy.name(),
            fmt_float(cell.snr_db),
            fmt_float(cell.mean_sum_se),
            fmt_float(cell.std_sum_se),
            cell.trials,
            fmt_float(cell.mean_build_seconds),
        )?;
    }
    Ok(())
}

/// Write the result as CSV to a file, surfacing the path on failure.
pub fn emit_csv(result: &ExperimentResult, destination: &Path) -> Result<()> {
    let file = std::fs::File::create(destination)
        .map_err(|e| Error::io(destination.display().to_string(), e))?;
    let mut writer = std::io::BufWriter::new(file);
    write_csv(result, &mut writer)
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io(destination.display().to_string(), e))
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub strategy: Strategy,
    pub snr_db: f64,
    pub mean_sum_se: f64,
    pub std_sum_se: f64,
    pub trials: usize,
    pub mean_build_seconds: f64,
}

/// Parse CSV text produced by [`write_csv`], for round-trip checks and
/// downstream tooling.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::InvalidInput(format!(
                "unexpected CSV header: {other:?}"
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::InvalidInput(format!(
                "row {}: expected 6 fields, got {}",
                i + 1,
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::InvalidInput(format!("row {}: bad float '{s}' ({e})", i + 1)))
        };
        rows.push(CsvRow {
            strategy: fields[0].parse()?,
            snr_db: num(fields[1])?,
            mean_sum_se: num(fields[2])?,
            std_sum_se: num(fields[3])?,
            trials: fields[4].parse().map_err(|e| {
                Error::InvalidInput(format!("row {}: bad trial count '{}' ({e})", i + 1, fields[4]))
            })?,
            mean_build_seconds: num(fields[5])?,
        });
    }
    Ok(rows)
}
