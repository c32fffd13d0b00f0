//! Plain CSV matrices: one row per line, no header unless asked for.

use std::fs;
use std::path::Path;

use lsketch::DenseMatrix;

use crate::error::{BenchError, Result};

/// Shortest fixed format that round-trips every `f64`: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rows are numbered by file line, columns from 1.
pub fn parse_matrix_csv(text: &str, header: bool) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(BenchError::RaggedRows { row: line, expected, found: record.len() });
        }
        for (j, field) in record.iter().enumerate() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => return Err(BenchError::Parse { row: line, col: j + 1, text: field.to_string() }),
            }
        }
        rows += 1;
    }
    match cols {
        Some(c) if c > 0 => Ok(DenseMatrix::from_row_major(rows, c, data)?),
        _ => Err(BenchError::Parse { row: 1, col: 1, text: String::new() }),
    }
}

pub fn load_matrix_csv(path: impl AsRef<Path>, header: bool) -> Result<DenseMatrix> {
    parse_matrix_csv(&fs::read_to_string(path)?, header)
}

pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&v| format_float(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn save_matrix_csv(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}
