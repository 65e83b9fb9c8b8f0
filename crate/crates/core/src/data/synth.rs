use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{rng, Error, Result};

/// Isotropic Gaussian clusters, one per class, with unit standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub k: usize,
    pub per_class: usize,
    pub d: usize,
    /// Distance between any two cluster centers, in standard deviations.
    pub separation: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("class count {} < 2", self.k)));
        }
        if self.per_class == 0 {
            return Err(Error::Config("per_class must be at least 1".into()));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::Config(format!("separation {} must be positive", self.separation)));
        }
        if self.d < self.k {
            return Err(Error::Config(format!(
                "dimension {} is below the class count {}; equidistant centers need d >= k",
                self.d, self.k
            )));
        }
        Ok(())
    }

    /// Centers `separation / sqrt(2) * u_c` for a random orthonormal frame
    /// `u_0 .. u_{k-1}`, so every pair sits exactly `separation` apart.
    fn centers(&self) -> Array2<f64> {
        let mut rng = rng::rng(rng::derive(self.seed, "centers"));
        let mut frame: Vec<Array1<f64>> = Vec::with_capacity(self.k);
        while frame.len() < self.k {
            let mut v: Array1<f64> = (0..self.d).map(|_| rng.sample(StandardNormal)).collect();
            for u in &frame {
                let proj = v.dot(u);
                v.scaled_add(-proj, u);
            }
            let norm = v.dot(&v).sqrt();
            if norm > 1e-8 {
                frame.push(v / norm);
            }
        }
        let radius = self.separation / std::f64::consts::SQRT_2;
        let mut centers = Array2::zeros((self.k, self.d));
        for (c, u) in frame.iter().enumerate() {
            centers.row_mut(c).assign(&(u * radius));
        }
        centers
    }

    // Coordinates of a center lie in [-radius, radius]; four standard
    // deviations of margin keep clamping rare.
    fn half_range(&self) -> f64 {
        self.separation / std::f64::consts::SQRT_2 + 4.0
    }

    fn sample(&self, per_class: usize, stream: &str) -> Result<Dataset> {
        self.validate()?;
        let centers = self.centers();
        let half = self.half_range();
        let mut rng = rng::rng(rng::derive(self.seed, stream));
        let n = self.k * per_class;
        let mut features = Array2::zeros((n, self.d));
        let mut labels = Vec::with_capacity(n);
        for (i, mut row) in features.rows_mut().into_iter().enumerate() {
            let c = i % self.k;
            for (x, &mu) in row.iter_mut().zip(centers.row(c)) {
                let z: f64 = rng.sample(StandardNormal);
                *x = ((mu + z + half) / (2.0 * half)).clamp(0.0, 1.0);
            }
            labels.push(c);
        }
        Dataset::new(features, labels, self.k)
    }
}

/// Training set: `per_class` samples of each class, interleaved by class.
pub fn synth_gaussian(spec: &SynthSpec) -> Result<Dataset> {
    spec.sample(spec.per_class, "train")
}

/// Held-out samples from the same clusters, drawn from an independent stream.
pub fn synth_gaussian_test(spec: &SynthSpec, per_class: usize) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::Config("test per_class must be at least 1".into()));
    }
    spec.sample(per_class, "test")
}
