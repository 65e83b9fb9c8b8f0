use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::loss::{loss_soft, one_hot, LossSpec};
use super::mlp::{sgd_step, Mlp};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Inverted dropout on hidden activations; 0 disables it.
    #[serde(default)]
    pub dropout_rate: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            learning_rate: 0.1,
            batch_size: 128,
            dropout_rate: 0.0,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        Ok(())
    }
}

/// Mixup: each batch is blended with a permutation of itself using a
/// `Beta(alpha, alpha)` weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixupSpec {
    pub enabled: bool,
    pub alpha: f64,
}

impl Default for MixupSpec {
    fn default() -> Self {
        MixupSpec {
            enabled: false,
            alpha: 8.0,
        }
    }
}

impl MixupSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("mixup alpha {} must be positive", self.alpha)));
        }
        Ok(())
    }
}

pub fn sample_mixup_lambda(alpha: f64, rng: &mut rng::Rng) -> Result<f64> {
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::Config(format!("mixup alpha {alpha}: {e}")))?;
    Ok(beta.sample(rng))
}

/// `x = lambda x_a + (1 - lambda) x_b`, with targets mixed the same way.
pub fn mixup_batch(
    x_a: ArrayView2<f64>,
    y_a: &[usize],
    x_b: ArrayView2<f64>,
    y_b: &[usize],
    lambda: f64,
    k: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("mixup weight {lambda} outside [0, 1]")));
    }
    if x_a.dim() != x_b.dim() || y_a.len() != y_b.len() || y_a.len() != x_a.nrows() {
        return Err(Error::Shape("mixup pair shapes differ".into()));
    }
    let x = &x_a * lambda + &x_b * (1.0 - lambda);
    let t = one_hot(y_a, k)? * lambda + one_hot(y_b, k)? * (1.0 - lambda);
    Ok((x, t))
}

pub(crate) fn dropout_mask_with(shape: (usize, usize), rate: f64, rng: &mut rng::Rng) -> Array2<f64> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < keep { scale } else { 0.0 })
}

/// Inverted-dropout mask: each entry is `1 / (1 - rate)` with probability
/// `1 - rate` and 0 otherwise.
pub fn dropout_mask(shape: (usize, usize), rate: f64, seed: u64) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(dropout_mask_with(shape, rate, &mut rng::rng(seed)))
}

/// One pass over `order` in mini-batches. Returns the sample-weighted mean
/// training loss.
#[allow(clippy::too_many_arguments)]
pub fn fit_epoch(
    params: &mut Mlp,
    x: ArrayView2<f64>,
    labels: &[usize],
    order: &[usize],
    loss: &LossSpec,
    mixup: &MixupSpec,
    hyper: &TrainHyper,
    rng: &mut rng::Rng,
) -> Result<f64> {
    hyper.validate()?;
    if labels.len() != x.nrows() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), x.nrows())));
    }
    let k = params.output_dim();
    let mut total = 0.0;
    for batch in order.chunks(hyper.batch_size) {
        let xb = x.select(Axis(0), batch);
        let yb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
        let (xb, targets) = if mixup.enabled {
            let lambda = sample_mixup_lambda(mixup.alpha, rng)?;
            let mut perm: Vec<usize> = (0..batch.len()).collect();
            perm.shuffle(rng);
            let xp = xb.select(Axis(0), &perm);
            let yp: Vec<usize> = perm.iter().map(|&j| yb[j]).collect();
            mixup_batch(xb.view(), &yb, xp.view(), &yp, lambda, k)?
        } else {
            let t = one_hot(&yb, k)?;
            (xb, t)
        };
        let cache = params.forward_cached(xb.view(), Some((hyper.dropout_rate, rng)))?;
        total += loss_soft(loss, cache.probs.view(), targets.view())? * batch.len() as f64;
        let grads = params.backward_cached(&cache, targets.view(), loss)?;
        sgd_step(params, &grads, hyper.learning_rate)?;
    }
    Ok(total / order.len().max(1) as f64)
}

const EVAL_CHUNK: usize = 2048;

/// Arg-max class per row (evaluation mode, no dropout). Ties go to the
/// smallest class index.
pub fn predict(params: &Mlp, x: ArrayView2<f64>) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(x.nrows());
    let mut start = 0;
    while start < x.nrows() {
        let end = (start + EVAL_CHUNK).min(x.nrows());
        let probs = super::forward(params, x.slice(s![start..end, ..]))?;
        out.extend(probs.rows().into_iter().map(|row| {
            let mut best = 0;
            for (c, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = c;
                }
            }
            best
        }));
        start = end;
    }
    Ok(out)
}

pub fn accuracy(params: &Mlp, x: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    if labels.len() != x.nrows() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), x.nrows())));
    }
    let pred = predict(params, x)?;
    let hits = pred.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{backward, forward, init_params, loss};
    use ndarray::array;

    #[test]
    fn mixup_edges() {
        let xa = array![[1.0, 2.0], [3.0, 4.0]];
        let xb = array![[0.0, 0.0], [1.0, 1.0]];
        let (x, t) = mixup_batch(xa.view(), &[0, 1], xb.view(), &[2, 2], 1.0, 3).unwrap();
        assert_eq!(x, xa);
        assert_eq!(t, one_hot(&[0, 1], 3).unwrap());

        let (x, t) = mixup_batch(xa.view(), &[1, 2], xb.view(), &[1, 0], 0.5, 3).unwrap();
        assert_eq!(x, array![[0.5, 1.0], [2.0, 2.5]]);
        assert_eq!(t.row(0), one_hot(&[1], 3).unwrap().row(0));
        assert_eq!(t.row(1).to_vec(), vec![0.5, 0.0, 0.5]);
        assert!(mixup_batch(xa.view(), &[0, 1], xb.view(), &[0, 1], 1.5, 3).is_err());
    }

    #[test]
    fn dropout_masks() {
        let m = dropout_mask((10, 10), 0.0, 1).unwrap();
        assert!(m.iter().all(|&v| v == 1.0));
        let m = dropout_mask((100, 1000), 0.3, 2).unwrap();
        let kept = m.iter().filter(|&&v| v > 0.0).count() as f64 / m.len() as f64;
        assert!((kept - 0.7).abs() < 0.01, "{kept}");
        assert!((m.mean().unwrap() - 1.0).abs() < 0.02);
        assert!(m.iter().all(|&v| v == 0.0 || (v - 1.0 / 0.7).abs() < 1e-12));
        assert!(dropout_mask((1, 1), 1.0, 0).is_err());
    }

    #[test]
    fn predict_ties_go_low() {
        let m = crate::nn::Mlp::zeros(&[2, 3]).unwrap();
        assert_eq!(predict(&m, array![[0.3, 0.4]].view()).unwrap(), vec![0]);
    }

    #[test]
    fn step_decreases_convex_loss() {
        // one layer softmax regression is convex in its parameters
        let mut m = init_params(&[2, 3], 4).unwrap();
        let x = array![[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.2, 0.1]];
        let y = [0, 1, 2, 1];
        let before = loss(&LossSpec::Cce, forward(&m, x.view()).unwrap().view(), &y).unwrap();
        let g = backward(&m, x.view(), &y, &LossSpec::Cce).unwrap();
        sgd_step(&mut m, &g, 0.05).unwrap();
        let after = loss(&LossSpec::Cce, forward(&m, x.view()).unwrap().view(), &y).unwrap();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn fit_epoch_is_deterministic() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.2, 0.1], [0.5, 0.5]];
        let y = [0, 1, 2, 1, 0];
        let hyper = TrainHyper { learning_rate: 0.1, batch_size: 2, dropout_rate: 0.2 };
        let mix = MixupSpec { enabled: true, alpha: 8.0 };
        let run = || {
            let mut m = init_params(&[2, 5, 3], 1).unwrap();
            let mut r = rng::rng(3);
            let l = fit_epoch(&mut m, x.view(), &y, &[4, 2, 0, 1, 3], &LossSpec::Cce, &mix, &hyper, &mut r).unwrap();
            (m, l)
        };
        let (a, la) = run();
        let (b, lb) = run();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }
}
