//! Fairness-sensitive tabular datasets.
//!
//! A [`TabularDataset`] holds integer-coded features, binary labels (1 is the
//! favorable outcome), and a binary protected-group indicator per row. Data
//! comes from CSV files described by a [`DatasetSchema`] or from the
//! synthetic generator in [`synth`], which also produces drifted releases.

mod matrix;
mod schema;
mod split;
pub mod synth;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use matrix::FeatureMatrix;
pub use schema::{load_csv, write_csv, ColumnSpec, DatasetSchema, LabelSpec, ProtectedSpec};
pub use split::{split, split_indices};
pub use synth::{synth_generate, synth_shift, SynthSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

impl ColumnMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnMeta {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: &[&str]) -> Self {
        ColumnMeta {
            name: name.into(),
            kind: ColumnKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
        }
    }
}

/// Provenance carried alongside the rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// Generator settings for synthetic data; required by [`synth_shift`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    /// Rows dropped at load time because a cell was empty.
    #[serde(default)]
    pub rejected_rows: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabularDataset {
    name: String,
    release: String,
    protected_attribute: String,
    columns: Vec<ColumnMeta>,
    #[serde(skip)]
    rows: FeatureMatrix,
    #[serde(skip)]
    labels: Vec<u8>,
    #[serde(skip)]
    protected: Vec<u8>,
    meta: DatasetMeta,
}

/// JSON sidecar describing a dataset without its rows.
#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    dataset: &'a TabularDataset,
    n_rows: usize,
    favorable_rate: f64,
    group1_fraction: f64,
}

impl TabularDataset {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        release: impl Into<String>,
        protected_attribute: impl Into<String>,
        columns: Vec<ColumnMeta>,
        rows: FeatureMatrix,
        labels: Vec<u8>,
        protected: Vec<u8>,
        meta: DatasetMeta,
    ) -> Result<Self> {
        let ds = TabularDataset {
            name: name.into(),
            release: release.into(),
            protected_attribute: protected_attribute.into(),
            columns,
            rows,
            labels,
            protected,
            meta,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.rows.n_rows();
        if n == 0 {
            return Err(Error::Argument("dataset has no rows".into()));
        }
        if self.labels.len() != n || self.protected.len() != n {
            return Err(Error::Argument(format!(
                "row count {n} disagrees with {} labels / {} protected values",
                self.labels.len(),
                self.protected.len()
            )));
        }
        if self.rows.n_cols() != self.columns.len() {
            return Err(Error::Argument(format!(
                "{} feature columns but {} column descriptions",
                self.rows.n_cols(),
                self.columns.len()
            )));
        }
        if self.labels.iter().chain(&self.protected).any(|&v| v > 1) {
            return Err(Error::Argument("labels and protected values must be 0 or 1".into()));
        }
        for (j, col) in self.columns.iter().enumerate() {
            match &col.kind {
                ColumnKind::Numeric => {
                    if let Some(i) = (0..n).find(|&i| !self.rows.get(i, j).is_finite()) {
                        return Err(Error::Cell {
                            row: i,
                            column: col.name.clone(),
                            message: "non-finite value".into(),
                        });
                    }
                }
                ColumnKind::Categorical { levels } => {
                    for i in 0..n {
                        let v = self.rows.get(i, j);
                        if v < 0.0 || v.fract() != 0.0 || v as usize >= levels.len() {
                            return Err(Error::Cell {
                                row: i,
                                column: col.name.clone(),
                                message: format!("invalid level code {v}"),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn release(&self) -> &str {
        &self.release
    }

    /// Name of the attribute that defines the two protected groups.
    pub fn protected_attribute(&self) -> &str {
        &self.protected_attribute
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn rows(&self) -> &FeatureMatrix {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn protected(&self) -> &[u8] {
        &self.protected
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.rows.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn has_both_labels(&self) -> bool {
        self.labels.contains(&0) && self.labels.contains(&1)
    }

    pub fn has_both_groups(&self) -> bool {
        self.protected.contains(&0) && self.protected.contains(&1)
    }

    /// Returns a dataset with the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        TabularDataset::new(
            self.name.clone(),
            self.release.clone(),
            self.protected_attribute.clone(),
            self.columns.clone(),
            self.rows.select(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.protected[i]).collect(),
            self.meta.clone(),
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_release(mut self, release: impl Into<String>) -> Self {
        self.release = release.into();
        self
    }

    /// Short content fingerprint, used to tell whether a cached trace was
    /// produced from this exact data.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        h.update([0]);
        h.update(self.release.as_bytes());
        h.update([0]);
        for v in self.rows.as_slice() {
            h.update(v.to_le_bytes());
        }
        h.update(&self.labels);
        h.update(&self.protected);
        hex::encode(&h.finalize()[..12])
    }

    pub fn write_metadata(&self, path: &Path) -> Result<()> {
        let n = self.len() as f64;
        let sidecar = Sidecar {
            dataset: self,
            n_rows: self.len(),
            favorable_rate: self.labels.iter().map(|&v| v as f64).sum::<f64>() / n,
            group1_fraction: self.protected.iter().map(|&v| v as f64).sum::<f64>() / n,
        };
        let text = serde_json::to_string_pretty(&sidecar)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn tiny() -> TabularDataset {
        TabularDataset::new(
            "tiny",
            "base",
            "sex",
            vec![ColumnMeta::numeric("x"), ColumnMeta::categorical("sex", &["f", "m"])],
            FeatureMatrix::from_rows(&[vec![0.5, 0.0], vec![1.5, 1.0], vec![2.5, 1.0]]).unwrap(),
            vec![0, 1, 1],
            vec![0, 1, 1],
            DatasetMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_level_codes() {
        let err = TabularDataset::new(
            "t",
            "base",
            "g",
            vec![ColumnMeta::categorical("g", &["a", "b"])],
            FeatureMatrix::from_rows(&[vec![2.0]]).unwrap(),
            vec![1],
            vec![0],
            DatasetMeta::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Cell { row: 0, .. }), "{err}");
    }

    #[test]
    fn rejects_non_binary_labels() {
        let err = TabularDataset::new(
            "t",
            "base",
            "g",
            vec![ColumnMeta::numeric("x")],
            FeatureMatrix::from_rows(&[vec![2.0]]).unwrap(),
            vec![2],
            vec![0],
            DatasetMeta::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn subset_keeps_metadata() {
        let ds = tiny();
        let sub = ds.subset(&[2, 0]).unwrap();
        assert_eq!(sub.labels(), &[1, 0]);
        assert_eq!(sub.rows().row(0), &[2.5, 1.0]);
        assert_eq!(sub.columns(), ds.columns());
        assert_eq!(sub.protected_attribute(), "sex");
    }
}
