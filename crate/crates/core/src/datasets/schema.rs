use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnMeta, DatasetMeta, FeatureMatrix, TabularDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub column: String,
    /// Levels mapped to the favorable outcome (label 1).
    pub favorable: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedSpec {
    pub column: String,
    /// Levels mapped to protected group 1; every other level is group 0.
    pub group1: Vec<String>,
}

/// Describes how a CSV file maps onto a [`TabularDataset`].
///
/// ```json
/// {
///   "name": "census",
///   "columns": [
///     {"name": "age", "kind": "numeric"},
///     {"name": "sex", "kind": "categorical", "levels": ["Male", "Female"]},
///     {"name": "income", "kind": "categorical", "levels": [">50K", "<=50K"]}
///   ],
///   "label": {"column": "income", "favorable": [">50K"]},
///   "protected": {"column": "sex", "group1": ["Male"]}
/// }
/// ```
///
/// The label column is removed from the features; the protected column stays
/// in as an ordinary categorical feature. Categorical cells are coded by their
/// position in `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    pub label: LabelSpec,
    pub protected: ProtectedSpec,
}

fn proper_subset_codes(levels: &[String], chosen: &[String], what: &str) -> Result<Vec<bool>> {
    if chosen.is_empty() {
        return Err(Error::Schema(format!("{what} level set is empty")));
    }
    let mut mask = vec![false; levels.len()];
    for level in chosen {
        let idx = levels
            .iter()
            .position(|l| l == level)
            .ok_or_else(|| Error::Schema(format!("{what} level `{level}` is not a declared level")))?;
        mask[idx] = true;
    }
    if mask.iter().all(|&m| m) {
        return Err(Error::Schema(format!(
            "{what} level set must leave at least one level out"
        )));
    }
    Ok(mask)
}

impl DatasetSchema {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: DatasetSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    fn column(&self, name: &str) -> Result<(usize, &ColumnSpec)> {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` is not declared")))
    }

    fn categorical_levels(&self, name: &str) -> Result<&[String]> {
        match &self.column(name)?.1.kind {
            ColumnKind::Categorical { levels } => Ok(levels),
            ColumnKind::Numeric => Err(Error::Schema(format!(
                "column `{name}` must be categorical"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
            if let ColumnKind::Categorical { levels } = &c.kind {
                if levels.is_empty() {
                    return Err(Error::Schema(format!("column `{}` has no levels", c.name)));
                }
                let distinct: HashSet<_> = levels.iter().collect();
                if distinct.len() != levels.len() {
                    return Err(Error::Schema(format!(
                        "column `{}` repeats a level",
                        c.name
                    )));
                }
            }
        }
        if self.label.column == self.protected.column {
            return Err(Error::Schema(
                "label and protected attribute must be different columns".into(),
            ));
        }
        proper_subset_codes(
            self.categorical_levels(&self.label.column)?,
            &self.label.favorable,
            "favorable",
        )?;
        proper_subset_codes(
            self.categorical_levels(&self.protected.column)?,
            &self.protected.group1,
            "protected group-1",
        )?;
        Ok(())
    }

    /// Feature columns (everything but the label), in declaration order.
    pub fn feature_columns(&self) -> Vec<ColumnMeta> {
        self.columns
            .iter()
            .filter(|c| c.name != self.label.column)
            .map(|c| ColumnMeta {
                name: c.name.clone(),
                kind: c.kind.clone(),
            })
            .collect()
    }
}

/// Loads a CSV file with a header row, coding cells according to `schema`.
///
/// Rows containing an empty cell are dropped and counted in
/// `meta().rejected_rows`. Any other malformed cell is an error naming the
/// 1-based data row and the column.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<TabularDataset> {
    schema.validate()?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let positions: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    for c in &schema.columns {
        if !positions.contains_key(c.name.as_str()) {
            return Err(Error::Schema(format!("missing column `{}` in CSV header", c.name)));
        }
    }
    if let Some(extra) = header
        .iter()
        .find(|h| !schema.columns.iter().any(|c| &c.name == *h))
    {
        return Err(Error::Schema(format!("CSV column `{extra}` is not in the schema")));
    }

    let label_levels = schema.categorical_levels(&schema.label.column)?;
    let favorable = proper_subset_codes(label_levels, &schema.label.favorable, "favorable")?;
    let group_levels = schema.categorical_levels(&schema.protected.column)?;
    let group1 = proper_subset_codes(group_levels, &schema.protected.group1, "protected group-1")?;

    let features = schema.feature_columns();
    let feature_pos: Vec<usize> = features.iter().map(|c| positions[c.name.as_str()]).collect();
    let label_pos = positions[schema.label.column.as_str()];
    let protected_feature = features
        .iter()
        .position(|c| c.name == schema.protected.column)
        .expect("protected column is a feature");

    let mut rows = FeatureMatrix::empty(features.len());
    let mut labels = Vec::new();
    let mut protected = Vec::new();
    let mut rejected = 0usize;
    let mut buf = vec![0.0; features.len()];

    for (r, record) in reader.records().enumerate() {
        let row_no = r + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Cell {
                row: row_no,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        if record.iter().any(|cell| cell.trim().is_empty()) {
            rejected += 1;
            continue;
        }
        for (k, (col, &pos)) in features.iter().zip(&feature_pos).enumerate() {
            buf[k] = code_cell(record[pos].trim(), col, row_no)?;
        }
        let label_cell = record[label_pos].trim();
        let label_code = label_levels
            .iter()
            .position(|l| l == label_cell)
            .ok_or_else(|| Error::Cell {
                row: row_no,
                column: schema.label.column.clone(),
                message: format!("unknown level `{label_cell}`"),
            })?;
        labels.push(u8::from(favorable[label_code]));
        protected.push(u8::from(group1[buf[protected_feature] as usize]));
        rows.push_row(&buf);
    }

    TabularDataset::new(
        schema.name.clone(),
        "base",
        schema.protected.column.clone(),
        features,
        rows,
        labels,
        protected,
        DatasetMeta {
            rejected_rows: rejected,
            ..DatasetMeta::default()
        },
    )
}

fn code_cell(cell: &str, col: &ColumnMeta, row: usize) -> Result<f64> {
    match &col.kind {
        ColumnKind::Numeric => {
            let v: f64 = cell.parse().map_err(|_| Error::Cell {
                row,
                column: col.name.clone(),
                message: format!("cannot parse `{cell}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Cell {
                    row,
                    column: col.name.clone(),
                    message: format!("non-finite value `{cell}`"),
                });
            }
            Ok(v)
        }
        ColumnKind::Categorical { levels } => levels
            .iter()
            .position(|l| l == cell)
            .map(|i| i as f64)
            .ok_or_else(|| Error::Cell {
                row,
                column: col.name.clone(),
                message: format!("unknown level `{cell}`"),
            }),
    }
}

/// Writes `ds` back out in `schema`'s column order. The label is written as
/// the first favorable level or the first unfavorable level.
pub fn write_csv(ds: &TabularDataset, schema: &DatasetSchema, path: &Path) -> Result<()> {
    schema.validate()?;
    let label_levels = schema.categorical_levels(&schema.label.column)?;
    let favorable = proper_subset_codes(label_levels, &schema.label.favorable, "favorable")?;
    let pos_level = &label_levels[favorable.iter().position(|&f| f).unwrap()];
    let neg_level = &label_levels[favorable.iter().position(|&f| !f).unwrap()];

    let features = schema.feature_columns();
    if features != ds.columns() {
        return Err(Error::Schema(
            "dataset columns do not match the schema's feature columns".into(),
        ));
    }

    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{other:?}")),
    })?;
    writer.write_record(schema.columns.iter().map(|c| c.name.as_str()))?;
    for i in 0..ds.len() {
        let row = ds.rows().row(i);
        let mut k = 0;
        let mut record = Vec::with_capacity(schema.columns.len());
        for c in &schema.columns {
            if c.name == schema.label.column {
                record.push(if ds.labels()[i] == 1 { pos_level } else { neg_level }.clone());
                continue;
            }
            record.push(match &c.kind {
                ColumnKind::Numeric => format!("{}", row[k]),
                ColumnKind::Categorical { levels } => levels[row[k] as usize].clone(),
            });
            k += 1;
        }
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
