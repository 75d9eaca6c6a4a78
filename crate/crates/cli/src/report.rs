//! Report output: numbers at a fixed significant-digit count, CSV tables,
//! and pretty-printed JSON, all written through one funnel so repeated runs
//! with the same seed produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

/// Six significant digits with a plain decimal point, no exponent notation.
/// Values at or above 10^6 keep their integer digits and drop the fraction.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exponent = x.abs().log10().floor() as i32;
    let precision = (5 - exponent).max(0) as usize;
    format!("{x:.precision$}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("encoding {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// Grid means print as a single value when the coordinates agree (the usual
/// diagonal sweep) and as a `;`-separated list otherwise.
pub fn format_mean(mean: &[f64]) -> String {
    if mean.iter().all(|&m| m == mean[0]) {
        format_sig(mean[0])
    } else {
        mean.iter().map(|&m| format_sig(m)).collect::<Vec<_>>().join(";")
    }
}

// ---------------------------------------------------------------------------
