use rand::seq::index;

use super::{label_shift, Dataset};
use crate::{rng, Error, Result};

/// A dataset partitioned into shifted reverse samples and untouched leftovers.
#[derive(Debug, Clone)]
pub struct ReverseSplit {
    reverse_idx: Vec<usize>,
    leftover_idx: Vec<usize>,
    beta: f64,
    shifted: Dataset,
}

impl ReverseSplit {
    /// Sorted indices of the reverse subset.
    pub fn reverse_idx(&self) -> &[usize] {
        &self.reverse_idx
    }

    /// Sorted indices of the leftover subset.
    pub fn leftover_idx(&self) -> &[usize] {
        &self.leftover_idx
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The full training set with reverse labels shifted.
    pub fn dataset(&self) -> &Dataset {
        &self.shifted
    }
}

/// `round(beta * n)`.
pub fn reverse_size(n: usize, beta: f64) -> usize {
    (beta * n as f64).round() as usize
}

/// Picks `round(beta * n)` samples uniformly without replacement and shifts
/// their labels by one class.
pub fn make_reverse_split(ds: &Dataset, beta: f64, seed: u64) -> Result<ReverseSplit> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Config(format!("beta {beta} outside (0, 1)")));
    }
    let n = ds.n();
    let k = ds.k();
    let m = reverse_size(n, beta);
    if m < k {
        return Err(Error::Config(format!(
            "reverse subset of {m} samples is smaller than the class count {k}"
        )));
    }
    if m >= n {
        return Err(Error::Config(format!(
            "reverse subset of {m} samples leaves no leftover samples"
        )));
    }

    let mut rng = rng::rng(seed);
    let mut reverse_idx = index::sample(&mut rng, n, m).into_vec();
    reverse_idx.sort_unstable();

    let mut in_reverse = vec![false; n];
    for &i in &reverse_idx {
        in_reverse[i] = true;
    }
    let leftover_idx = (0..n).filter(|&i| !in_reverse[i]).collect();

    let mut labels = ds.labels().to_vec();
    for &i in &reverse_idx {
        labels[i] = label_shift(labels[i], k)?;
    }
    Ok(ReverseSplit {
        reverse_idx,
        leftover_idx,
        beta,
        shifted: ds.with_labels(labels)?,
    })
}
