//! Run reports as JSON lines and a flat CSV summary; per-epoch training metrics.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use wsci_core::eval::RunReport;

use crate::error::{CliError, Result};
use crate::formats::write_string;

fn report_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Report(format!("{}: {e}", path.display()))
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).map_err(|e| report_error(path, e))?);
        out.push('\n');
    }
    write_string(path, &out)
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| CliError::parse(path, i + 1, e.to_string()))?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mode: String,
    pub seed: u64,
    pub window: Option<usize>,
    pub accuracy: f64,
    pub auc: Option<f64>,
}

impl From<&RunReport> for SummaryRow {
    fn from(r: &RunReport) -> Self {
        SummaryRow {
            mode: r.mode.name().to_string(),
            seed: r.seed,
            window: r.window,
            accuracy: r.accuracy,
            auc: r.auc,
        }
    }
}

/// `mode,seed,window,accuracy,auc`, one row per run.
pub fn write_summary_csv(path: &Path, reports: &[RunReport]) -> Result<()> {
    write_csv(path, reports.iter().map(SummaryRow::from))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| report_error(path, e))?;
    }
    let bytes = writer.into_inner().map_err(|e| report_error(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| report_error(path, e))?;
    write_string(path, &text)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| report_error(path, e))?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| report_error(path, e)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    /// Accuracy on held-out instances of known category, when supplied.
    pub heldout_accuracy: Option<f64>,
    pub mean_weight_inlier: Option<f64>,
    pub mean_weight_outlier: Option<f64>,
}

/// Writes human-readable lines to stdout.
pub fn print_lines(lines: impl IntoIterator<Item = String>) {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for l in lines {
        let _ = writeln!(lock, "{l}");
    }
}
