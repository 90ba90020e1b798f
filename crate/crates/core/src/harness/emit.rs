use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::calibrate::csv_error;
use super::CurvePoint;
use crate::detectors::DetectorSpec;
use crate::error::{Error, Result};

pub const HEADER: [&str; 7] = ["detector", "sinr_db", "pd", "stderr", "n_trials", "threshold", "seed"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub detector: String,
    pub sinr_db: f64,
    pub pd: f64,
    pub stderr: f64,
    pub n_trials: usize,
    pub threshold: f64,
    pub seed: u64,
}

pub fn result_rows(detector: &DetectorSpec, curve: &[CurvePoint], threshold: f64, seed: u64) -> Vec<ResultRow> {
    curve
        .iter()
        .map(|p| ResultRow {
            detector: detector.id().to_string(),
            sinr_db: p.sinr_db,
            pd: p.pd,
            stderr: p.stderr,
            n_trials: p.n_trials,
            threshold,
            seed,
        })
        .collect()
}

/// Writes the rows to `path` as CSV and `sidecar` as pretty JSON next to it
/// (same stem, `.json` extension). Returns the sidecar path.
pub fn emit_results(rows: &[ResultRow], sidecar: &impl Serialize, path: &Path) -> Result<PathBuf> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(HEADER).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let json_path = path.with_extension("json");
    let mut text = serde_json::to_string_pretty(sidecar).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    Ok(json_path)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}
