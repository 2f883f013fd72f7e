//! CSV ingestion with per-dataset adapters.
//!
//! An [`AdapterSpec`] assigns every column of the source file to exactly one
//! role: label, sensitive attribute, categorical feature, numeric feature, or
//! dropped. Encoding is pinned for reproducibility: one-hot with the first
//! category dropped (categories in lexicographic order), numeric columns
//! standardized to zero mean and unit variance over the loaded rows. Rows
//! with a missing cell (empty or `?`) in any used column are dropped and
//! counted.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterSpec {
    pub label_column: String,
    /// Raw cell value mapped to Y=1; every other value maps to 0.
    pub positive_label_value: String,
    pub sensitive_column: String,
    /// Raw cell value mapped to A=1; every other value maps to 0.
    pub privileged_value: String,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub numeric_columns: Vec<String>,
    #[serde(default)]
    pub drop_columns: Vec<String>,
}

/// Raw cells of the rows that survived ingestion, aligned with the encoded
/// [`Dataset`]. Lets callers echo the original file with extra columns.
#[derive(Clone, Debug)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl AdapterSpec {
    /// Resolves column names to indices and checks the exactly-one-role
    /// invariant against the file header.
    fn resolve(&self, header: &[String]) -> Result<ColumnPlan> {
        if self.label_column == self.sensitive_column {
            return Err(Error::Config(format!(
                "label_column and sensitive_column are both {:?}",
                self.label_column
            )));
        }
        let find = |name: &str| -> Result<usize> {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("column {name:?} not found in file header")))
        };
        let mut roles: Vec<Option<&'static str>> = vec![None; header.len()];
        let mut assign = |idx: usize, role: &'static str| -> Result<()> {
            if let Some(prev) = roles[idx] {
                return Err(Error::Config(format!(
                    "column {:?} assigned to both {prev} and {role}",
                    header[idx]
                )));
            }
            roles[idx] = Some(role);
            Ok(())
        };
        let label = find(&self.label_column)?;
        assign(label, "label")?;
        let sensitive = find(&self.sensitive_column)?;
        assign(sensitive, "sensitive")?;
        let mut numeric = Vec::new();
        for name in &self.numeric_columns {
            let idx = find(name)?;
            assign(idx, "numeric")?;
            numeric.push(idx);
        }
        let mut categorical = Vec::new();
        for name in &self.categorical_columns {
            let idx = find(name)?;
            assign(idx, "categorical")?;
            categorical.push(idx);
        }
        for name in &self.drop_columns {
            assign(find(name)?, "drop")?;
        }
        if let Some(i) = roles.iter().position(|r| r.is_none()) {
            return Err(Error::Config(format!(
                "column {:?} present in file but not assigned a role (add it to \
                 numeric_columns, categorical_columns or drop_columns)",
                header[i]
            )));
        }
        Ok(ColumnPlan { label, sensitive, numeric, categorical })
    }
}

struct ColumnPlan {
    label: usize,
    sensitive: usize,
    numeric: Vec<usize>,
    categorical: Vec<usize>,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Loads and encodes a CSV file, also returning the surviving raw rows.
pub fn load_csv_full(path: &Path, spec: &AdapterSpec) -> Result<(Dataset, RawTable)> {
    let file = std::fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::DatasetNotFound(path.to_path_buf())
        } else {
            Error::Io(e)
        }
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let plan = spec.resolve(&header)?;

    let mut labels: Vec<u8> = Vec::new();
    let mut sensitive: Vec<u8> = Vec::new();
    let mut numeric_cols: Vec<Vec<f64>> = vec![Vec::new(); plan.numeric.len()];
    let mut cat_cols: Vec<Vec<String>> = vec![Vec::new(); plan.categorical.len()];
    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    let mut dropped_missing = 0usize;

    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1; // 1-based data row for error messages
        if record.len() != header.len() {
            return Err(Error::Ingestion {
                row,
                message: format!("expected {} cells, found {}", header.len(), record.len()),
            });
        }
        let used =
            plan.numeric.iter().chain(&plan.categorical).chain([&plan.label, &plan.sensitive]);
        if used.into_iter().any(|&i| is_missing(&record[i])) {
            dropped_missing += 1;
            continue;
        }
        labels.push(u8::from(record[plan.label] == spec.positive_label_value));
        sensitive.push(u8::from(record[plan.sensitive] == spec.privileged_value));
        for (store, &i) in numeric_cols.iter_mut().zip(&plan.numeric) {
            let value: f64 = record[i].parse().map_err(|_| Error::Ingestion {
                row,
                message: format!(
                    "column {:?}: cannot parse {:?} as a number",
                    header[i], &record[i]
                ),
            })?;
            store.push(value);
        }
        for (store, &i) in cat_cols.iter_mut().zip(&plan.categorical) {
            store.push(record[i].to_string());
        }
        raw_rows.push(record.iter().map(|c| c.to_string()).collect());
    }
    if dropped_missing > 0 {
        log::info!("{}: dropped {dropped_missing} rows with missing cells", path.display());
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::DegenerateData(format!(
            "{}: no usable rows after ingestion",
            path.display()
        )));
    }

    // standardized numeric columns first, then one-hot blocks in spec order
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for values in &numeric_cols {
        columns.push(standardize(values));
    }
    for values in &cat_cols {
        let categories: BTreeSet<&String> = values.iter().collect();
        for category in categories.iter().skip(1) {
            columns.push(values.iter().map(|v| f64::from(&v == category)).collect());
        }
    }
    let d = columns.len();
    let mut features = Array2::<f64>::zeros((n, d));
    for (j, column) in columns.iter().enumerate() {
        for (i, &v) in column.iter().enumerate() {
            features[[i, j]] = v;
        }
    }

    let ds = Dataset::new(features, labels, sensitive)?;
    ds.require_all_cells()?;
    Ok((ds, RawTable { header, rows: raw_rows }))
}

/// Loads and encodes a CSV file per the adapter.
pub fn load_csv(path: &Path, spec: &AdapterSpec) -> Result<Dataset> {
    Ok(load_csv_full(path, spec)?.0)
}

/// Zero mean, unit variance over the loaded rows (population variance);
/// near-constant columns become all zeros.
fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}
