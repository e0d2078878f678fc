//! CSV ingestion for design matrices and response vectors, plus JSON file
//! helpers. Rows are observations; a header line is detected by its first
//! field failing to parse as a number.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn parse_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => rows.push(values),
            Err(e) => {
                // A non-numeric first line is a header; elsewhere it is a
                // data error.
                if line == 0 && rows.is_empty() {
                    continue;
                }
                return Err(Error::invalid(format!(
                    "{} line {}: {e}",
                    path.display(),
                    line + 1
                )));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{}: no data rows", path.display())));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::invalid(format!(
            "{}: ragged rows (expected width {width})",
            path.display()
        )));
    }
    Ok(rows)
}

/// Reads a matrix with observations as rows.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = parse_rows(path)?;
    let (n, m) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Reads a single-column vector (one value per row).
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let rows = parse_rows(path)?;
    if rows[0].len() != 1 {
        return Err(Error::invalid(format!(
            "{}: expected a single column, found {}",
            path.display(),
            rows[0].len()
        )));
    }
    Ok(DVector::from_fn(rows.len(), |i, _| rows[i][0]))
}

/// Writes a serializable value as pretty JSON, with path context on errors.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    std::fs::write(path, body + "\n")
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
