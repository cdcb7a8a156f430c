//! CSV tables, exact-rational JSON and run manifests.

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

/// One sweep point: its cells, wall time and the error that skipped it, if any.
pub struct RowOutcome {
    pub cells: Vec<String>,
    pub wall_time: f64,
    pub error: Option<ratpoints_core::Error>,
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[RowOutcome]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r.cells).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn int_value(i: &BigInt) -> Value {
    match i.to_i64() {
        Some(v) => json!(v),
        None => json!(i.to_string()),
    }
}

/// `[numerator, denominator]`; entries that overflow 64 bits become strings.
pub fn rational(q: &BigRational) -> Value {
    json!([int_value(q.numer()), int_value(q.denom())])
}

#[derive(Serialize)]
pub struct ManifestRow {
    pub index: usize,
    pub wall_time_s: f64,
    pub status: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config_file: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub output: PathBuf,
    pub rows: Vec<ManifestRow>,
    pub total_wall_time_s: f64,
    pub exit_code: u8,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

pub fn status(e: &Option<ratpoints_core::Error>) -> String {
    match e {
        None => "ok".into(),
        Some(e) => format!("skipped: {e}"),
    }
}
