use ndarray::{Array2, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Probabilities below this are clamped before taking a logarithm.
pub const CCE_CLAMP: f64 = 1e-12;

/// Per-sample losses on softmax output `p` against a target distribution `t`:
///
/// - `Cce`: `-sum_c t_c ln p_c`
/// - `Mae`: `sum_c |t_c - p_c|`, i.e. `2 (1 - p_y)` for a hard label
/// - `Lq`: `sum_c t_c (1 - p_c^q) / q`, which tends to CCE as `q -> 0` and is
///   half of MAE at `q = 1`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossSpec {
    Cce,
    Mae,
    Lq { q: f64 },
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        if let LossSpec::Lq { q } = *self {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::Config(format!("Lq exponent {q} outside (0, 1]")));
            }
        }
        Ok(())
    }

    fn sample_loss(&self, p: ArrayView1<f64>, t: ArrayView1<f64>) -> f64 {
        match *self {
            LossSpec::Cce => p
                .iter()
                .zip(t)
                .filter(|(_, &tc)| tc != 0.0)
                .map(|(&pc, &tc)| -tc * pc.max(CCE_CLAMP).ln())
                .sum(),
            LossSpec::Mae => p.iter().zip(t).map(|(&pc, &tc)| (tc - pc).abs()).sum(),
            LossSpec::Lq { q } => p
                .iter()
                .zip(t)
                .filter(|(_, &tc)| tc != 0.0)
                .map(|(&pc, &tc)| tc * (1.0 - pc.powf(q)) / q)
                .sum(),
        }
    }

    /// Writes `d loss / d logits` for one sample into `out`.
    pub(crate) fn logit_grad(&self, p: &[f64], t: &[f64], out: &mut [f64]) {
        match *self {
            LossSpec::Cce => {
                for ((o, &pc), &tc) in out.iter_mut().zip(p).zip(t) {
                    *o = pc - tc;
                }
            }
            LossSpec::Mae | LossSpec::Lq { .. } => {
                // d loss / d p, then through the softmax Jacobian
                for ((o, &pc), &tc) in out.iter_mut().zip(p).zip(t) {
                    *o = match *self {
                        LossSpec::Mae if pc > tc => 1.0,
                        LossSpec::Mae if pc < tc => -1.0,
                        LossSpec::Lq { q } if tc != 0.0 => -tc * pc.powf(q - 1.0),
                        _ => 0.0,
                    };
                }
                let dot: f64 = out.iter().zip(p).map(|(g, pc)| g * pc).sum();
                for (o, &pc) in out.iter_mut().zip(p) {
                    *o = pc * (*o - dot);
                }
            }
        }
    }
}

pub fn one_hot(labels: &[usize], k: usize) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((labels.len(), k));
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::Domain(format!("label {y} outside [0, {k})")));
        }
        t[[i, y]] = 1.0;
    }
    Ok(t)
}

/// Mean loss against soft targets (rows of `targets` are distributions).
pub fn loss_soft(spec: &LossSpec, probs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64> {
    if probs.dim() != targets.dim() {
        return Err(Error::Shape(format!(
            "probabilities {:?} vs targets {:?}",
            probs.dim(),
            targets.dim()
        )));
    }
    let n = probs.nrows();
    if n == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    let mut total = 0.0;
    Zip::from(probs.rows()).and(targets.rows()).for_each(|p, t| {
        total += spec.sample_loss(p, t);
    });
    Ok(total / n as f64)
}

/// Mean loss against hard labels.
pub fn loss(spec: &LossSpec, probs: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    if labels.len() != probs.nrows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            probs.nrows()
        )));
    }
    let targets = one_hot(labels, probs.ncols())?;
    loss_soft(spec, probs, targets.view())
}
