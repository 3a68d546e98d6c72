//! Plain-text matrix and number-list interchange: comma-separated values,
//! one matrix row per line, no header, `.` decimal, scientific notation
//! accepted on input. `parse_matrix(write_matrix(m)) == m` bit for bit.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView2};

/// Why a matrix file was rejected. Positions are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixParseError {
    #[error("empty input: no matrix rows")]
    Empty,
    #[error("row {row}: expected {expected} columns, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: cannot parse {token:?} as a number")]
    BadNumber {
        row: usize,
        column: usize,
        token: String,
    },
    #[error("row {row}, column {column}: non-finite value {token:?}")]
    NonFinite {
        row: usize,
        column: usize,
        token: String,
    },
}

/// Why an alpha list was rejected. Positions are 1-based.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlphaParseError {
    #[error("alpha list is empty")]
    Empty,
    #[error("entry {index}: cannot parse {token:?} as a number")]
    BadNumber { index: usize, token: String },
    #[error("entry {index}: alpha must be finite and strictly positive, got {value}")]
    OutOfRange { index: usize, value: f64 },
}

fn parse_token(token: &str, row: usize, column: usize) -> Result<f64, MatrixParseError> {
    let trimmed = token.trim();
    let value: f64 = trimmed.parse().map_err(|_| MatrixParseError::BadNumber {
        row,
        column,
        token: trimmed.to_string(),
    })?;
    if !value.is_finite() {
        return Err(MatrixParseError::NonFinite {
            row,
            column,
            token: trimmed.to_string(),
        });
    }
    Ok(value)
}

/// Parses a rectangular matrix. Rows are `\n`-separated (a trailing `\r` per
/// line is tolerated), entries comma-separated. Every row must have the same
/// width as the first; the first offending row is named in the error.
pub fn parse_matrix(text: &str) -> Result<Array2<f64>, MatrixParseError> {
    let body = text.trim_end_matches('\n');
    if body.is_empty() {
        return Err(MatrixParseError::Empty);
    }
    let mut flat = Vec::new();
    let mut ncols = 0;
    let mut nrows = 0;
    for (i, line) in body.split('\n').enumerate() {
        let row = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut width = 0;
        for (j, token) in line.split(',').enumerate() {
            flat.push(parse_token(token, row, j + 1)?);
            width += 1;
        }
        if row == 1 {
            ncols = width;
        } else if width != ncols {
            return Err(MatrixParseError::Ragged {
                row,
                expected: ncols,
                found: width,
            });
        }
        nrows = row;
    }
    Ok(Array2::from_shape_vec((nrows, ncols), flat)
        .expect("row-width accounting guarantees the shape"))
}

/// Renders a matrix in the format `parse_matrix` reads, with a trailing
/// newline. `f64` display output round-trips exactly.
pub fn write_matrix(matrix: &ArrayView2<f64>) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String cannot fail");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Parses a comma-separated list of shrinkage exponents: nonempty, each
/// finite and strictly positive.
pub fn parse_alphas(text: &str) -> Result<Vec<f64>, AlphaParseError> {
    if text.trim().is_empty() {
        return Err(AlphaParseError::Empty);
    }
    let mut out = Vec::new();
    for (i, token) in text.split(',').enumerate() {
        let index = i + 1;
        let trimmed = token.trim();
        let value: f64 = trimmed.parse().map_err(|_| AlphaParseError::BadNumber {
            index,
            token: trimmed.to_string(),
        })?;
        if !(value.is_finite() && value > 0.0) {
            return Err(AlphaParseError::OutOfRange { index, value });
        }
        out.push(value);
    }
    Ok(out)
}
