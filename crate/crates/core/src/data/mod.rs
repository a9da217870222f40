//! Datasets and everything that slices them: loading, train/test splits,
//! k-fold assignment and the accuracy metric.

mod loader;
mod pmlb;
mod split;
mod synthetic;

pub use loader::{load_csv, parse_table, TargetColumn};
pub(crate) use pmlb::write_atomic;
pub use pmlb::{bundled, decode_pmlb, fetch_pmlb, PmlbClient, DEFAULT_PMLB_URL};
pub use split::{accuracy, kfold, train_test_split, FoldAssignment};
pub use synthetic::{make_hill_valley, HillValleyParams};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Labelled feature matrix. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    features: Matrix,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    n_classes: usize,
}

impl Dataset {
    /// Checks shape, label range and finiteness. Class presence is not
    /// checked here since subsets of a dataset may miss classes.
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        n_classes: usize,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Dataset(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        if n_classes < 2 {
            return Err(Error::Dataset(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Dataset(format!(
                "label {bad} outside 0..{n_classes}"
            )));
        }
        if !features.all_finite() {
            return Err(Error::Dataset("non-finite feature value".into()));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
            n_classes,
        })
    }

    /// Like [`Dataset::new`] with generated `x0..x{d-1}` feature names.
    pub fn from_parts(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        let names = (0..features.cols()).map(|j| format!("x{j}")).collect();
        Dataset::new(name, features, labels, names, n_classes)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    /// Rows at `idx`, in that order. Keeps the class count of the parent.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            n_classes: self.n_classes,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Per-class row counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Fraction of rows in the most frequent class.
    pub fn majority_fraction(&self) -> f64 {
        let max = self.class_counts().into_iter().max().unwrap_or(0);
        max as f64 / self.n_rows().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_rows() {
        let x = Matrix::zeros(3, 2);
        assert!(Dataset::from_parts("t", x, vec![0, 1], 2).is_err());
    }

    #[test]
    fn rejects_label_out_of_range() {
        let x = Matrix::zeros(2, 1);
        assert!(Dataset::from_parts("t", x, vec![0, 2], 2).is_err());
    }

    #[test]
    fn rejects_nan() {
        let x = Matrix::from_rows(&[[f64::NAN], [1.0]]).unwrap();
        assert!(Dataset::from_parts("t", x, vec![0, 1], 2).is_err());
    }
}
