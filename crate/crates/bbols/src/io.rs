//! Plain-text matrix and vector files: a header line `m n d`, then the
//! entries in row-major order separated by whitespace. Vectors are stored
//! as `len 1 1`.

use std::fs;
use std::path::Path;

use bbols_core::{BlockMatrix, Matrix};

use crate::format::g9;
use crate::HarnessError;

/// Parsed file contents before interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawArray {
    pub rows: usize,
    pub cols: usize,
    pub block_len: usize,
    /// Row-major.
    pub entries: Vec<f64>,
}

pub fn parse_array(text: &str) -> Result<RawArray, HarnessError> {
    let mut tokens = text.split_whitespace();
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["m", "n", "d"]) {
        let tok = tokens
            .next()
            .ok_or_else(|| HarnessError::Input(format!("missing header field {name}")))?;
        *slot = tok
            .parse()
            .map_err(|_| HarnessError::Input(format!("header field {name} is not an integer: {tok}")))?;
    }
    let [rows, cols, block_len] = header;
    let entries = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| HarnessError::Input(format!("not a number: {t}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if entries.len() != rows * cols {
        return Err(HarnessError::Input(format!(
            "expected {} entries for a {rows}x{cols} array, found {}",
            rows * cols,
            entries.len()
        )));
    }
    Ok(RawArray {
        rows,
        cols,
        block_len,
        entries,
    })
}

pub fn format_array(rows: usize, cols: usize, block_len: usize, row_major: &[f64]) -> String {
    let mut out = format!("{rows} {cols} {block_len}\n");
    for r in 0..rows {
        let line: Vec<String> = row_major[r * cols..(r + 1) * cols].iter().map(|v| full_precision(*v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Shortest representation that parses back to the same value.
fn full_precision(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        g9(v)
    }
}

pub fn read_matrix(path: &Path) -> Result<BlockMatrix, HarnessError> {
    let raw = parse_array(&fs::read_to_string(path)?)?;
    if raw.block_len == 0 {
        return Err(HarnessError::Input("block length must be positive".into()));
    }
    let entries = Matrix::from_row_major(raw.rows, raw.cols, &raw.entries);
    Ok(BlockMatrix::new(entries, raw.block_len)?)
}

pub fn write_matrix(path: &Path, matrix: &BlockMatrix) -> Result<(), HarnessError> {
    let a = matrix.matrix();
    fs::write(path, format_array(a.rows(), a.cols(), matrix.block_len(), &a.to_row_major()))?;
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, HarnessError> {
    let raw = parse_array(&fs::read_to_string(path)?)?;
    if raw.cols != 1 && raw.rows != 1 {
        return Err(HarnessError::Input(format!("expected a vector, found {}x{}", raw.rows, raw.cols)));
    }
    Ok(raw.entries)
}

pub fn format_vector(v: &[f64]) -> String {
    format_array(v.len(), 1, 1, v)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), HarnessError> {
    fs::write(path, format_vector(v))?;
    Ok(())
}
