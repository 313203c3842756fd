use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of features.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_cols == 0 && !data.is_empty() {
            return Err(Error::Argument("zero-width matrix with data".into()));
        }
        if n_cols > 0 && !data.len().is_multiple_of(n_cols) {
            return Err(Error::Argument(format!(
                "{} values do not fill rows of width {n_cols}",
                data.len()
            )));
        }
        Ok(FeatureMatrix { n_cols, data })
    }

    pub fn empty(n_cols: usize) -> Self {
        FeatureMatrix {
            n_cols,
            data: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::Argument(format!(
                    "row {i} has {} values, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix { n_cols, data })
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.data.chunks_exact(self.n_cols.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            n_cols: self.n_cols,
            data,
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.n_cols);
        self.data.extend_from_slice(row);
    }

    pub fn column_mean(&self, j: usize) -> f64 {
        let n = self.n_rows();
        (0..n).map(|i| self.get(i, j)).sum::<f64>() / n as f64
    }

    /// Population standard deviation of column `j`.
    pub fn column_std(&self, j: usize) -> f64 {
        let n = self.n_rows();
        let mean = self.column_mean(j);
        ((0..n).map(|i| (self.get(i, j) - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
    }
}
