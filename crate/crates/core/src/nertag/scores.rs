use serde::{Deserialize, Serialize};

use super::NerError;
use crate::Scalar;

/// Dense `tokens × labels` score table, row-major. Values are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> ScoreMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, NerError> {
        if data.len() != rows * cols {
            return Err(NerError::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(NerError::NonFiniteScore {
                row: i / cols.max(1),
                col: i % cols.max(1),
            });
        }
        Ok(ScoreMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, NerError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(NerError::LengthMismatch {
                expected: cols,
                got: r.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        assert!(value.is_finite());
        ScoreMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    /// Adds `c` to every cell.
    pub fn shifted(&self, c: T) -> Self {
        ScoreMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v + c).collect(),
        }
    }
}
