//! Deterministic text artifacts: CSV at 17 significant digits, pretty JSON.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

/// Scientific notation with 17 significant digits, enough to round-trip
/// every `f64`.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<I>(path: &Path, columns: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut s = columns.join(",");
    s.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let cells: Vec<String> = row.into_iter().map(sci).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}
