//! Learning order of mutually exclusive patterns of different scale.
//!
//! A clean dataset is carved into three disjoint groups: large-scale regular
//! samples (true labels), small-scale regular samples (labels shifted by one)
//! and chaos samples (uniformly random labels). One network trains on the
//! union while the accuracy of each group against its own labels is tracked.
//! During the first epoch the summed gradient of each group is compared with
//! the total gradient by cosine similarity.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{label_shift, Dataset};
use crate::nn::{self, Gradients, LossSpec, MixupSpec, Mlp, TrainHyper};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleExpSpec {
    /// Large-scale regular samples.
    pub n_large: usize,
    /// Small-scale regular samples.
    pub n_small: usize,
    pub n_chaos: usize,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub loss: LossSpec,
    pub hyper: TrainHyper,
    /// Gradient probes spread evenly over the first epoch.
    pub probes: usize,
    pub seed: u64,
}

impl Default for ScaleExpSpec {
    fn default() -> Self {
        ScaleExpSpec {
            n_large: 2000,
            n_small: 1000,
            n_chaos: 4000,
            epochs: 20,
            hidden: vec![100, 100],
            loss: LossSpec::Cce,
            hyper: TrainHyper::default(),
            probes: 5,
            seed: 0,
        }
    }
}

impl ScaleExpSpec {
    pub fn validate(&self, available: usize) -> Result<()> {
        if self.n_small == 0 || self.n_chaos == 0 {
            return Err(Error::Config("every pattern needs at least one sample".into()));
        }
        if self.n_large <= self.n_small {
            return Err(Error::Config(format!(
                "large-scale pattern ({}) must outnumber the small-scale one ({})",
                self.n_large, self.n_small
            )));
        }
        let total = self.n_large + self.n_small + self.n_chaos;
        if total > available {
            return Err(Error::Config(format!(
                "patterns need {total} samples, only {available} available"
            )));
        }
        if self.epochs == 0 || self.probes == 0 {
            return Err(Error::Config("epochs and probes must be at least 1".into()));
        }
        self.hyper.validate()?;
        self.loss.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternAccuracy {
    /// 0 is the untrained network.
    pub epoch: usize,
    pub large: f64,
    pub small: f64,
    pub chaos: f64,
    pub train_loss: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientProbe {
    /// Mini-batch step within the first epoch at which the probe was taken.
    pub step: usize,
    pub cos_large: f64,
    pub cos_small: f64,
    pub cos_chaos: f64,
    pub norm_large: f64,
    pub norm_small: f64,
    pub norm_chaos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub spec: ScaleExpSpec,
    pub accuracy: Vec<PatternAccuracy>,
    pub probes: Vec<GradientProbe>,
    pub mean_cos_large: f64,
    pub mean_cos_small: f64,
    pub mean_cos_chaos: f64,
}

impl ScaleReport {
    /// First trained epoch whose large-pattern accuracy reaches `threshold`.
    pub fn first_epoch_large_at(&self, threshold: f64) -> Option<&PatternAccuracy> {
        self.accuracy.iter().skip(1).find(|a| a.large >= threshold)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,acc_large,acc_small,acc_chaos,train_loss")?;
        for a in &self.accuracy {
            let loss = a.train_loss.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", a.epoch, a.large, a.small, a.chaos, loss)?;
        }
        Ok(())
    }
}

struct Group {
    idx: Vec<usize>,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Summed (not averaged) loss gradient over one group.
fn group_gradient(params: &Mlp, ds: &Dataset, group: &Group, loss: &LossSpec) -> Result<Gradients> {
    let x = ds.features().select(ndarray::Axis(0), &group.idx);
    let labels: Vec<usize> = group.idx.iter().map(|&i| ds.labels()[i]).collect();
    let mut g = nn::backward(params, x.view(), &labels, loss)?;
    g.scale(group.idx.len() as f64);
    Ok(g)
}

fn group_accuracy(pred: &[usize], labels: &[usize], group: &Group) -> f64 {
    group.idx.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / group.idx.len() as f64
}

/// Runs the experiment on clean data `base` (oracle labels required).
pub fn run_scale_experiment(base: &Dataset, spec: &ScaleExpSpec) -> Result<ScaleReport> {
    spec.validate(base.n())?;
    let truth = base
        .oracle_labels()
        .ok_or_else(|| Error::Precondition("scale experiment needs clean labels".into()))?;
    let k = base.k();
    let total = spec.n_large + spec.n_small + spec.n_chaos;
    let mut rng = rng::rng(rng::derive(spec.seed, "scale-select"));
    let chosen = index::sample(&mut rng, base.n(), total).into_vec();

    let mut labels = Vec::with_capacity(total);
    for (pos, &i) in chosen.iter().enumerate() {
        let y = truth[i];
        labels.push(if pos < spec.n_large {
            y
        } else if pos < spec.n_large + spec.n_small {
            label_shift(y, k)?
        } else {
            rng.random_range(0..k)
        });
    }
    let ds = base.subset(&chosen)?.with_labels(labels)?;
    let large = Group { idx: (0..spec.n_large).collect() };
    let small = Group { idx: (spec.n_large..spec.n_large + spec.n_small).collect() };
    let chaos = Group { idx: (spec.n_large + spec.n_small..total).collect() };

    let mut dims = vec![ds.d()];
    dims.extend(&spec.hidden);
    dims.push(k);
    let mut params = nn::init_params(&dims, rng::derive(spec.seed, "init"))?;
    let mut shuffle_rng = rng::rng(rng::derive(spec.seed, "shuffle"));

    let record = |params: &Mlp, epoch, train_loss| -> Result<PatternAccuracy> {
        let pred = nn::predict(params, ds.features())?;
        Ok(PatternAccuracy {
            epoch,
            large: group_accuracy(&pred, ds.labels(), &large),
            small: group_accuracy(&pred, ds.labels(), &small),
            chaos: group_accuracy(&pred, ds.labels(), &chaos),
            train_loss,
        })
    };
    let mut accuracy = vec![record(&params, 0, None)?];
    let mut probes = Vec::with_capacity(spec.probes);
    let mut order: Vec<usize> = (0..total).collect();
    let steps = total.div_ceil(spec.hyper.batch_size);
    let probe_steps: Vec<usize> = (0..spec.probes).map(|j| j * steps / spec.probes).collect();
    let no_mixup = MixupSpec::default();

    for epoch in 1..=spec.epochs {
        order.shuffle(&mut shuffle_rng);
        let train_loss = if epoch == 1 {
            // step through the first epoch batch by batch so probes can be
            // taken between updates
            let mut weighted = 0.0;
            for (step, batch) in order.chunks(spec.hyper.batch_size).enumerate() {
                if probe_steps.contains(&step) {
                    probes.push(probe(&params, &ds, [&large, &small, &chaos], &spec.loss, step)?);
                }
                weighted += nn::fit_epoch(
                    &mut params,
                    ds.features(),
                    ds.labels(),
                    batch,
                    &spec.loss,
                    &no_mixup,
                    &spec.hyper,
                    &mut shuffle_rng,
                )? * batch.len() as f64;
            }
            weighted / total as f64
        } else {
            nn::fit_epoch(
                &mut params,
                ds.features(),
                ds.labels(),
                &order,
                &spec.loss,
                &no_mixup,
                &spec.hyper,
                &mut shuffle_rng,
            )?
        };
        accuracy.push(record(&params, epoch, Some(train_loss))?);
    }

    let mean = |f: fn(&GradientProbe) -> f64| probes.iter().map(f).sum::<f64>() / probes.len() as f64;
    Ok(ScaleReport {
        spec: spec.clone(),
        mean_cos_large: mean(|p| p.cos_large),
        mean_cos_small: mean(|p| p.cos_small),
        mean_cos_chaos: mean(|p| p.cos_chaos),
        accuracy,
        probes,
    })
}

fn probe(params: &Mlp, ds: &Dataset, groups: [&Group; 3], loss: &LossSpec, step: usize) -> Result<GradientProbe> {
    let grads = groups
        .iter()
        .map(|g| group_gradient(params, ds, g, loss))
        .collect::<Result<Vec<_>>>()?;
    let mut total = grads[0].clone();
    total.add_assign(&grads[1])?;
    total.add_assign(&grads[2])?;
    let total = total.to_flat();
    let flat: Vec<Vec<f64>> = grads.iter().map(Gradients::to_flat).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(GradientProbe {
        step,
        cos_large: cosine(&total, &flat[0]),
        cos_small: cosine(&total, &flat[1]),
        cos_chaos: cosine(&total, &flat[2]),
        norm_large: norm(&flat[0]),
        norm_small: norm(&flat[1]),
        norm_chaos: norm(&flat[2]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[1.0, 0.0], &[2.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!(cosine(&[1.0, 0.0], &[0.0, 3.0]).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn validation() {
        let spec = ScaleExpSpec::default();
        assert_eq!(spec.n_chaos, 2 * spec.n_large);
        assert_eq!(spec.n_large, 2 * spec.n_small);
        assert!(spec.validate(7000).is_ok());
        assert!(spec.validate(6999).is_err());
        let flipped = ScaleExpSpec { n_large: 500, ..ScaleExpSpec::default() };
        assert!(matches!(flipped.validate(10_000), Err(Error::Config(_))));
    }
}
