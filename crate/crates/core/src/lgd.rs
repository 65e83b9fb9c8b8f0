//! LoR-peak training and relabeling.
//!
//! [`lgd_train`] trains on the reverse-split training set one epoch at a time
//! and keeps the parameters from the epoch where leftover accuracy over
//! reverse accuracy peaks. [`lgd_relabel_train`] repeats that from scratch,
//! replacing the training labels with the checkpoint's predictions after each
//! round.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, NoiseKind};
use crate::nn::{self, LossSpec, MixupSpec, Mlp, TrainHyper};
use crate::theory::{self, BoundsQuery};
use crate::{rng, Error, Result};

/// Noise source and rate the caller asserts the training labels carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredNoise {
    pub kind: NoiseKind,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgdConfig {
    pub beta: f64,
    pub epochs: usize,
    /// Hidden layer widths; input and output widths come from the data.
    pub hidden: Vec<usize>,
    pub loss: LossSpec,
    #[serde(default)]
    pub mixup: MixupSpec,
    pub hyper: TrainHyper,
    /// Evaluate the held-out set every epoch. Diagnostic only.
    #[serde(default)]
    pub record_oracle: bool,
    #[serde(default)]
    pub declared_noise: Option<DeclaredNoise>,
    /// Dominance factor used when checking `declared_noise`.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    9.0
}

impl Default for LgdConfig {
    fn default() -> Self {
        LgdConfig {
            beta: 0.1,
            epochs: 60,
            hidden: vec![64, 64],
            loss: LossSpec::Cce,
            mixup: MixupSpec::default(),
            hyper: TrainHyper::default(),
            record_oracle: false,
            declared_noise: None,
            delta: default_delta(),
        }
    }
}

impl LgdConfig {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        self.loss.validate()?;
        self.mixup.validate()?;
        self.hyper.validate()?;
        if let Some(noise) = self.declared_noise {
            let report = theory::check_config(
                &BoundsQuery {
                    k,
                    eta: noise.eta,
                    beta: self.beta,
                    delta: self.delta,
                },
                noise.kind,
            );
            if !report.feasible {
                return Err(Error::Infeasible(Box::new(report)));
            }
        }
        Ok(())
    }

    fn layer_dims(&self, d: usize, k: usize) -> Vec<usize> {
        let mut dims = vec![d];
        dims.extend(&self.hidden);
        dims.push(k);
        dims
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelConfig {
    pub outer_iters: usize,
    pub inner: LgdConfig,
}

impl RelabelConfig {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.outer_iters == 0 {
            return Err(Error::Config("relabel iterations must be at least 1".into()));
        }
        self.inner.validate(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Accuracy on leftover samples against their (noisy) labels.
    pub acc_l: f64,
    /// Accuracy on reverse samples against their shifted labels.
    pub acc_r: f64,
    pub lor: f64,
    pub train_loss: f64,
    pub oracle_test_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoRTrace {
    pub records: Vec<EpochRecord>,
    pub peak_epoch: usize,
    pub peak_lor: f64,
}

pub const TRACE_HEADER: &str = "epoch,acc_l,acc_r,lor,train_loss,oracle_test_acc";

impl LoRTrace {
    pub fn peak_record(&self) -> &EpochRecord {
        &self.records[self.peak_epoch - 1]
    }

    /// Record with the highest held-out accuracy (earliest on ties), when
    /// diagnostics were recorded.
    pub fn oracle_best(&self) -> Option<&EpochRecord> {
        let mut best: Option<&EpochRecord> = None;
        for r in &self.records {
            let acc = r.oracle_test_acc?;
            if best.is_none_or(|b| acc > b.oracle_test_acc.unwrap()) {
                best = Some(r);
            }
        }
        best
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            let oracle = r.oracle_test_acc.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.epoch, r.acc_l, r.acc_r, r.lor, r.train_loss, oracle
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: Mlp,
    pub epoch: usize,
    pub lor: f64,
}

#[derive(Debug, Clone)]
pub struct LgdRun {
    pub checkpoint: Checkpoint,
    pub trace: LoRTrace,
    pub reverse_idx: Vec<usize>,
}

/// Held-out data for per-epoch diagnostics. Ignored unless the config asks
/// for it.
#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics<'a> {
    pub test_set: Option<&'a Dataset>,
}

impl<'a> Diagnostics<'a> {
    pub fn none() -> Self {
        Diagnostics { test_set: None }
    }

    pub fn with_test_set(test_set: &'a Dataset) -> Self {
        Diagnostics {
            test_set: Some(test_set),
        }
    }

    fn test_accuracy(&self, params: &Mlp) -> Result<Option<f64>> {
        let Some(test) = self.test_set else {
            return Ok(None);
        };
        let Some(truth) = test.oracle_labels() else {
            return Ok(None);
        };
        nn::accuracy(params, test.features(), truth).map(Some)
    }
}

/// `acc_l / max(acc_r, 1 / (2 reverse_count))`.
pub fn compute_lor(acc_l: f64, acc_r: f64, reverse_count: usize) -> f64 {
    let floor = 1.0 / (2.0 * reverse_count.max(1) as f64);
    acc_l / acc_r.max(floor)
}

fn subset_accuracy(pred: &[usize], labels: &[usize], idx: &[usize]) -> f64 {
    let hits = idx.iter().filter(|&&i| pred[i] == labels[i]).count();
    hits as f64 / idx.len() as f64
}

/// Trains on a fresh reverse split of `ds` and returns the LoR-peak
/// checkpoint with the full per-epoch trace.
///
/// `seed` is split into independent streams for the reverse split, the
/// initialisation and the per-epoch shuffling.
pub fn lgd_train(ds: &Dataset, cfg: &LgdConfig, seed: u64, diag: Diagnostics<'_>) -> Result<LgdRun> {
    cfg.validate(ds.k())?;
    let split = data::make_reverse_split(ds, cfg.beta, rng::derive(seed, "split"))?;
    let train = split.dataset();
    let labels = train.labels();
    let x = train.features();
    let n_reverse = split.reverse_idx().len();

    let mut params = nn::init_params(&cfg.layer_dims(ds.d(), ds.k()), rng::derive(seed, "init"))?;
    let mut shuffle_rng = rng::rng(rng::derive(seed, "shuffle"));
    let mut order: Vec<usize> = (0..ds.n()).collect();

    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<Checkpoint> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let train_loss = nn::fit_epoch(
            &mut params,
            x,
            labels,
            &order,
            &cfg.loss,
            &cfg.mixup,
            &cfg.hyper,
            &mut shuffle_rng,
        )?;
        let pred = nn::predict(&params, x)?;
        let acc_l = subset_accuracy(&pred, labels, split.leftover_idx());
        let acc_r = subset_accuracy(&pred, labels, split.reverse_idx());
        let lor = compute_lor(acc_l, acc_r, n_reverse);
        let oracle_test_acc = if cfg.record_oracle {
            diag.test_accuracy(&params)?
        } else {
            None
        };
        records.push(EpochRecord {
            epoch,
            acc_l,
            acc_r,
            lor,
            train_loss,
            oracle_test_acc,
        });
        if best.as_ref().is_none_or(|b| lor > b.lor) {
            best = Some(Checkpoint {
                params: params.clone(),
                epoch,
                lor,
            });
        }
    }

    if records.iter().all(|r| r.acc_l == 0.0) {
        return Err(Error::Degenerate { epochs: cfg.epochs });
    }
    let checkpoint = best.expect("at least one epoch");
    Ok(LgdRun {
        trace: LoRTrace {
            peak_epoch: checkpoint.epoch,
            peak_lor: checkpoint.lor,
            records,
        },
        checkpoint,
        reverse_idx: split.reverse_idx().to_vec(),
    })
}

/// Replaces every label by the network's arg-max prediction.
pub fn relabel(ds: &Dataset, params: &Mlp) -> Result<Dataset> {
    if params.output_dim() != ds.k() {
        return Err(Error::Shape(format!(
            "network predicts {} classes, dataset has {}",
            params.output_dim(),
            ds.k()
        )));
    }
    let labels = nn::predict(params, ds.features())?;
    ds.with_labels(labels)
}

#[derive(Debug, Clone)]
pub struct RelabelRun {
    /// Checkpoint with the highest inner peak LoR over all iterations.
    pub model: Checkpoint,
    /// Zero-based iteration that produced `model`.
    pub model_iteration: usize,
    pub traces: Vec<LoRTrace>,
    pub reverse_sets: Vec<Vec<usize>>,
    /// Oracle agreement of the training labels: before the first iteration,
    /// then after each relabel. Empty unless diagnostics are recorded.
    pub label_agreement: Vec<f64>,
    /// Training labels after the final relabel.
    pub final_labels: Vec<usize>,
}

/// Iterated LGD with relabeling. Every iteration draws a fresh reverse split
/// of the current labels and starts from fresh random parameters.
pub fn lgd_relabel_train(
    ds: &Dataset,
    cfg: &RelabelConfig,
    seed: u64,
    diag: Diagnostics<'_>,
) -> Result<RelabelRun> {
    cfg.validate(ds.k())?;
    let track = cfg.inner.record_oracle;
    let mut current = ds.clone();
    let mut label_agreement = Vec::new();
    if track {
        label_agreement.extend(current.oracle_agreement());
    }

    let mut model: Option<(Checkpoint, usize)> = None;
    let mut traces = Vec::with_capacity(cfg.outer_iters);
    let mut reverse_sets = Vec::with_capacity(cfg.outer_iters);
    for iter in 0..cfg.outer_iters {
        let run = lgd_train(&current, &cfg.inner, rng::derive_indexed(seed, "relabel-iter", iter as u64), diag)?;
        current = relabel(&current, &run.checkpoint.params)?;
        if track {
            label_agreement.extend(current.oracle_agreement());
        }
        if model.as_ref().is_none_or(|(m, _)| run.checkpoint.lor > m.lor) {
            model = Some((run.checkpoint, iter));
        }
        traces.push(run.trace);
        reverse_sets.push(run.reverse_idx);
    }
    let (model, model_iteration) = model.expect("at least one iteration");
    Ok(RelabelRun {
        model,
        model_iteration,
        traces,
        reverse_sets,
        label_agreement,
        final_labels: current.labels().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lor_examples() {
        assert!((compute_lor(0.8, 0.1, 1000) - 8.0).abs() < 1e-12);
        assert!((compute_lor(0.5, 0.0, 1000) - 1000.0).abs() < 1e-9);
        assert_eq!(compute_lor(0.0, 0.3, 50), 0.0);
        assert_eq!(compute_lor(0.0, 0.0, 50), 0.0);
    }

    #[test]
    fn trace_csv_layout() {
        let trace = LoRTrace {
            records: vec![
                EpochRecord { epoch: 1, acc_l: 0.5, acc_r: 0.25, lor: 2.0, train_loss: 1.5, oracle_test_acc: None },
                EpochRecord { epoch: 2, acc_l: 0.75, acc_r: 0.25, lor: 3.0, train_loss: 1.0, oracle_test_acc: Some(0.9) },
            ],
            peak_epoch: 2,
            peak_lor: 3.0,
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines[1], "1,0.5,0.25,2,1.5,");
        assert_eq!(lines[2], "2,0.75,0.25,3,1,0.9");
        assert_eq!(trace.oracle_best(), None);
    }

    #[test]
    fn config_validation() {
        let mut cfg = LgdConfig { epochs: 0, ..Default::default() };
        assert!(matches!(cfg.validate(4), Err(Error::Config(_))));
        cfg.epochs = 3;
        cfg.declared_noise = Some(DeclaredNoise { kind: NoiseKind::Asymmetric, eta: 0.6 });
        assert!(matches!(cfg.validate(4), Err(Error::Infeasible(_))));
        cfg.declared_noise = Some(DeclaredNoise { kind: NoiseKind::Symmetric, eta: 0.4 });
        assert!(cfg.validate(4).is_ok());
    }
}
