//! Numeric data tables: a headered CSV of observation rows, returned as
//! named columns.

use std::path::Path;

use crate::error::{Error, Result};

/// Reads a numeric CSV file: first row is the header, every other cell a
/// finite number. Returns `(column names, columns)`.
pub fn read_numeric_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_numeric_csv_str(&text)
}

/// [`read_numeric_csv`] on in-memory text.
pub fn read_numeric_csv_str(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse("data CSV", e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        return Err(Error::parse("data CSV", "no header row".to_string()));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse("data CSV", e.to_string()))?;
        if record.len() != names.len() {
            return Err(Error::parse(
                "data CSV",
                format!(
                    "row {}: {} fields, expected {}",
                    r + 2,
                    record.len(),
                    names.len()
                ),
            ));
        }
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(
                    "data CSV",
                    format!(
                        "row {}, column '{}': '{}' is not a number",
                        r + 2,
                        names[k],
                        field
                    ),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    "data CSV",
                    format!("row {}, column '{}': non-finite value", r + 2, names[k]),
                ));
            }
            cols[k].push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(Error::parse("data CSV", "no data rows".to_string()));
    }
    Ok((names, cols))
}
