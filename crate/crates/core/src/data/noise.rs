use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{rng, Error, Result};

/// Fixed flipping rule for asymmetric noise: class `y` is corrupted to `map[y]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FlipMap(Vec<usize>);

impl FlipMap {
    /// Validates that `map` is a permutation of `[0, k)` without fixed points.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let k = map.len();
        if k < 2 {
            return Err(Error::Config(format!("flip map over {k} classes")));
        }
        let mut seen = vec![false; k];
        for (y, &t) in map.iter().enumerate() {
            if t >= k {
                return Err(Error::Config(format!("flip map sends {y} to {t} outside [0, {k})")));
            }
            if t == y {
                return Err(Error::Config(format!("flip map fixes class {y}")));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::Config(format!("flip map is not a permutation: {t} hit twice")));
            }
        }
        Ok(FlipMap(map))
    }

    /// `y -> (y + offset) mod k`.
    pub fn cyclic(k: usize, offset: usize) -> Result<Self> {
        Self::new((0..k).map(|y| (y + offset) % k).collect())
    }

    /// Default asymmetric map, `y -> (y + 2) mod k`. Falls back to the
    /// single available derangement for `k = 2`.
    pub fn default_for(k: usize) -> Result<Self> {
        if k == 2 {
            Self::cyclic(2, 1)
        } else {
            Self::cyclic(k, 2)
        }
    }

    /// Parses a comma-separated permutation such as `"2,3,4,5,6,7,8,9,0,1"`.
    pub fn parse(s: &str) -> Result<Self> {
        let map = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Config(format!("flip map entry {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(map)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, y: usize) -> usize {
        self.0[y]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Classes on which this map interferes with the `+1` label shift.
    ///
    /// A class collides when its polluted label equals its shifted label, or
    /// when shifting its polluted label restores the true label. Either merges
    /// two patterns that the asymmetric census keeps apart.
    pub fn shift_collisions(&self) -> Vec<usize> {
        let k = self.k();
        (0..k)
            .filter(|&y| self.0[y] == (y + 1) % k || (self.0[y] + 1) % k == y)
            .collect()
    }
}

impl TryFrom<Vec<usize>> for FlipMap {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<FlipMap> for Vec<usize> {
    fn from(m: FlipMap) -> Self {
        m.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSource {
    Symmetric,
    Asymmetric(FlipMap),
}

impl NoiseSource {
    pub fn kind(&self) -> NoiseKind {
        match self {
            NoiseSource::Symmetric => NoiseKind::Symmetric,
            NoiseSource::Asymmetric(_) => NoiseKind::Asymmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub source: NoiseSource,
    pub eta: f64,
}

impl NoiseSpec {
    pub fn new(source: NoiseSource, eta: f64) -> Result<Self> {
        let spec = NoiseSpec { source, eta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config(format!("eta {} outside (0, 1)", self.eta)));
        }
        Ok(())
    }
}

/// Corrupts each label independently with probability `eta`.
///
/// Symmetric noise moves a corrupted label uniformly onto one of the other
/// `k - 1` classes; asymmetric noise applies the flip map to the true label.
/// The oracle labels are carried over untouched.
pub fn inject_noise(ds: &Dataset, spec: &NoiseSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let oracle = ds
        .oracle_labels()
        .ok_or_else(|| Error::Precondition("noise injection needs oracle labels".into()))?;
    if oracle != ds.labels() {
        return Err(Error::Precondition(
            "noise injection expects a clean dataset (labels equal to oracle)".into(),
        ));
    }
    let k = ds.k();
    if let NoiseSource::Asymmetric(map) = &spec.source {
        if map.k() != k {
            return Err(Error::Config(format!(
                "flip map over {} classes for a {k}-class dataset",
                map.k()
            )));
        }
    }

    let mut rng = rng::rng(seed);
    let labels = oracle
        .iter()
        .map(|&y| {
            let u: f64 = rng.random();
            if u >= spec.eta {
                return y;
            }
            match &spec.source {
                NoiseSource::Symmetric => {
                    let r = rng.random_range(0..k - 1);
                    if r >= y {
                        r + 1
                    } else {
                        r
                    }
                }
                NoiseSource::Asymmetric(map) => map.apply(y),
            }
        })
        .collect();
    ds.with_labels(labels)
}
