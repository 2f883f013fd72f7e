//! Dataset representation, CSV ingestion, splitting, synthetic generation and
//! the fair-sampling baseline.

mod adapter;
mod presets;
mod sampling;
mod synthetic;

pub use adapter::{load_csv, load_csv_full, AdapterSpec, RawTable};
pub use presets::{adapter_preset, synthetic_preset, ADAPTER_PRESETS, SYNTHETIC_PRESETS};
pub use sampling::fair_sample;
pub use synthetic::{synthesize, SyntheticSpec};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Encoded feature matrix with binary labels and a binary sensitive
/// attribute.
///
/// `new` checks shapes, finiteness and binary coding. Presence of all four
/// (sensitive, label) cells is deliberately not a construction invariant:
/// small partitions produced by [`split`] may lack cells. Operations that
/// need the cells ([`fair_sample`], probability estimation, calibration)
/// check via [`Dataset::require_all_cells`].
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    sensitive: Vec<u8>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, sensitive: Vec<u8>) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n || sensitive.len() != n {
            return Err(Error::InvalidArgument(format!(
                "row mismatch: {n} feature rows, {} labels, {} sensitive entries",
                labels.len(),
                sensitive.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("empty dataset".into()));
        }
        if labels.iter().chain(&sensitive).any(|&v| v > 1) {
            return Err(Error::InvalidArgument(
                "labels and sensitive entries must be 0 or 1".into(),
            ));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("features contain non-finite values".into()));
        }
        Ok(Dataset { features, labels, sensitive })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    /// Counts (n11, n10, n01, n00) of the four (sensitive, label) cells.
    pub fn cell_counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for (&y, &a) in self.labels.iter().zip(&self.sensitive) {
            let idx = match (a, y) {
                (1, 1) => 0,
                (1, 0) => 1,
                (0, 1) => 2,
                _ => 3,
            };
            counts[idx] += 1;
        }
        counts
    }

    pub fn require_all_cells(&self) -> Result<()> {
        let counts = self.cell_counts();
        let names = ["A=1,Y=1", "A=1,Y=0", "A=0,Y=1", "A=0,Y=0"];
        for (name, count) in names.iter().zip(counts) {
            if count == 0 {
                return Err(Error::DegenerateData(format!(
                    "no rows in cell {name} ({} rows total)",
                    self.n()
                )));
            }
        }
        Ok(())
    }

    /// Rows at `indices`, in order; indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::InvalidArgument(format!(
                "row index {bad} out of range for {} rows",
                self.n()
            )));
        }
        Dataset::new(
            self.features.select(Axis(0), indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.sensitive[i]).collect(),
        )
    }

    /// Same features and sensitive attribute with replaced labels.
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Dataset> {
        Dataset::new(self.features.clone(), labels, self.sensitive.clone())
    }

    /// Feature matrix with the sensitive attribute appended as the last
    /// column. Classifiers observe the group: a group-dependent intercept is
    /// what lets label flipping realize group-wise decision thresholds.
    pub fn features_with_sensitive(&self) -> Array2<f64> {
        let n = self.n();
        let d = self.d();
        let mut out = Array2::<f64>::zeros((n, d + 1));
        out.slice_mut(ndarray::s![.., ..d]).assign(&self.features);
        for (i, &a) in self.sensitive.iter().enumerate() {
            out[[i, d]] = f64::from(a);
        }
        out
    }
}

/// Seeded train/test split: a uniform permutation of rows cut at
/// floor(train_fraction·n). Partitions are disjoint, exhaustive and
/// deterministic in (dataset, fraction, seed).
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction = {train_fraction} must lie in (0, 1)"
        )));
    }
    let n = ds.n();
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidArgument(format!(
            "split of {n} rows at fraction {train_fraction} leaves an empty partition"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let train = ds.subset(&indices[..n_train])?;
    let test = ds.subset(&indices[n_train..])?;
    Ok((train, test))
}
