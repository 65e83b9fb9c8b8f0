//! Datasets, label noise and reverse splits.
//!
//! A [`Dataset`] carries the labels used for training alongside an optional
//! copy of the ground-truth labels. The ground truth is only reachable through
//! [`Dataset::oracle_labels`], which exists for evaluation and diagnostics;
//! nothing on a training path calls it.

mod idx;
mod noise;
mod split;
mod synth;

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};

use crate::{Error, Result};

pub use idx::{load_idx, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels};
pub use noise::{inject_noise, FlipMap, NoiseKind, NoiseSource, NoiseSpec};
pub use split::{make_reverse_split, reverse_size, ReverseSplit};
pub use synth::{synth_gaussian, synth_gaussian_test, SynthSpec};

/// `(y + 1) mod k`.
pub fn label_shift(y: usize, k: usize) -> Result<usize> {
    if k < 2 {
        return Err(Error::Domain(format!("class count {k} < 2")));
    }
    if y >= k {
        return Err(Error::Domain(format!("label {y} outside [0, {k})")));
    }
    Ok((y + 1) % k)
}

#[derive(Debug, Clone)]
pub struct Dataset {
    features: Arc<Array2<f64>>,
    labels: Vec<usize>,
    oracle: Option<Arc<[usize]>>,
    k: usize,
}

impl Dataset {
    /// A clean dataset: the given labels double as the oracle labels.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, k: usize) -> Result<Self> {
        let oracle = labels.clone();
        Self::from_parts(features, labels, Some(oracle), k)
    }

    pub fn from_parts(
        features: Array2<f64>,
        labels: Vec<usize>,
        oracle: Option<Vec<usize>>,
        k: usize,
    ) -> Result<Self> {
        let ds = Dataset {
            features: Arc::new(features),
            labels,
            oracle: oracle.map(Arc::from),
            k,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.features.nrows();
        if self.k < 2 {
            return Err(Error::Config(format!("class count {} < 2", self.k)));
        }
        if n == 0 {
            return Err(Error::Config("dataset has no samples".into()));
        }
        if self.labels.len() != n {
            return Err(Error::Shape(format!(
                "{} labels for {n} feature rows",
                self.labels.len()
            )));
        }
        if let Some(y) = self.labels.iter().find(|&&y| y >= self.k) {
            return Err(Error::Domain(format!("label {y} outside [0, {})", self.k)));
        }
        if let Some(oracle) = &self.oracle {
            if oracle.len() != n {
                return Err(Error::Shape(format!(
                    "{} oracle labels for {n} feature rows",
                    oracle.len()
                )));
            }
            if let Some(y) = oracle.iter().find(|&&y| y >= self.k) {
                return Err(Error::Domain(format!(
                    "oracle label {y} outside [0, {})",
                    self.k
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Ground-truth labels, for evaluation and diagnostics only.
    pub fn oracle_labels(&self) -> Option<&[usize]> {
        self.oracle.as_deref()
    }

    pub fn has_oracle(&self) -> bool {
        self.oracle.is_some()
    }

    /// Same features and oracle, new training labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        let ds = Dataset {
            features: Arc::clone(&self.features),
            labels,
            oracle: self.oracle.clone(),
            k: self.k,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Drops the oracle labels entirely.
    pub fn without_oracle(&self) -> Self {
        Dataset {
            oracle: None,
            ..self.clone()
        }
    }

    /// Rows `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&i) = idx.iter().find(|&&i| i >= self.n()) {
            return Err(Error::Domain(format!("row {i} outside dataset of {}", self.n())));
        }
        let features = self.features.select(Axis(0), idx);
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        let oracle = self
            .oracle
            .as_ref()
            .map(|o| idx.iter().map(|&i| o[i]).collect());
        Self::from_parts(features, labels, oracle, self.k)
    }

    /// Fraction of training labels equal to the oracle label.
    pub fn oracle_agreement(&self) -> Option<f64> {
        let oracle = self.oracle.as_ref()?;
        let hits = self
            .labels
            .iter()
            .zip(oracle.iter())
            .filter(|(a, b)| a == b)
            .count();
        Some(hits as f64 / self.n() as f64)
    }

    /// Number of samples carrying each label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}
