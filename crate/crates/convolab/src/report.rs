//! Report structures shared across modules and deterministic file emission.
//!
//! Reports must be byte-identical across runs with the same inputs, so every
//! key-value collection is an ordered Vec (never a hash map) and floats are
//! written in Rust's shortest round-trip form with "." as the decimal point.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::verdict::Verdict;
use crate::{Error, Result};

/// Named scalars attached to a report, in insertion order.
pub type Params = Vec<(String, f64)>;

/// A point where an inequality was tightest or violated.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub label: String,
    pub location: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// A curve destined for the CSV sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSeries {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl CurveSeries {
    pub fn new(name: &str, x_label: &str, y_label: &str) -> Self {
        CurveSeries {
            name: name.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            points: Vec::new(),
        }
    }
}

/// Uniform outcome of an inequality check. `margin_min` is the least value of
/// (dominating side - dominated side) over the tested set, so nonnegative
/// means the inequality held everywhere it was evaluated.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub params: Params,
    pub margin_min: f64,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub curves: Vec<CurveSeries>,
    /// Caveats that qualify the verdict, e.g. lower-bound-only quadrature.
    pub flags: Vec<String>,
}

impl BoundReport {
    pub fn new(name: &str) -> Self {
        BoundReport {
            name: name.to_string(),
            params: Vec::new(),
            margin_min: f64::INFINITY,
            verdict: Verdict::Inconclusive,
            witnesses: Vec::new(),
            curves: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: f64) {
        self.params.push((key.to_string(), value));
    }

    pub fn get_param(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }
}

/// Write bytes through a sibling temp file and a rename, so concurrent
/// readers never observe a half-written report.
pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Representation(format!("json serialization: {e}")))?;
    text.push('\n');
    write_bytes_atomic(path, text.as_bytes())
}

/// CSV with a header row; cells are shortest round-trip floats.
pub fn write_csv_atomic(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    write_bytes_atomic(path, out.as_bytes())
}

/// All curves of a report stacked into one long-format CSV.
pub fn write_curves_csv(path: &Path, curves: &[CurveSeries]) -> Result<()> {
    let mut out = String::from("series,x_label,y_label,x,y\n");
    for c in curves {
        for &(x, y) in &c.points {
            out.push_str(&format!("{},{},{},{x},{y}\n", c.name, c.x_label, c.y_label));
        }
    }
    write_bytes_atomic(path, out.as_bytes())
}
