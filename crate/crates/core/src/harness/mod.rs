//! Experiment orchestration: repeated noisy-label runs, the pattern-scale
//! experiment, and result files.

mod emit;
mod scale;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, NoiseSpec, SynthSpec};
use crate::lgd::{self, Checkpoint, DeclaredNoise, Diagnostics, LgdConfig, LoRTrace, RelabelConfig};
use crate::nn::{self, LossSpec, MixupSpec, TrainHyper};
use crate::{rng, theory, Error, Result};

pub use emit::{emit_results, load_summary, TraceFormat};
pub use scale::{run_scale_experiment, GradientProbe, PatternAccuracy, ScaleExpSpec, ScaleReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Synthetic {
        spec: SynthSpec,
        test_per_class: usize,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        /// Keep only the first `n` training samples.
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
}

impl DataSource {
    /// `(train, test)`, both clean.
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        match self {
            DataSource::Synthetic {
                spec,
                test_per_class,
            } => Ok((
                data::synth_gaussian(spec)?,
                data::synth_gaussian_test(spec, *test_per_class)?,
            )),
            DataSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                train_limit,
                test_limit,
            } => {
                let train = truncate(data::load_idx(train_images, train_labels)?, *train_limit)?;
                let test = truncate(data::load_idx(test_images, test_labels)?, *test_limit)?;
                if train.d() != test.d() {
                    return Err(Error::Shape(format!(
                        "train images have {} features, test images {}",
                        train.d(),
                        test.d()
                    )));
                }
                let k = train.k().max(test.k());
                Ok((with_classes(train, k)?, with_classes(test, k)?))
            }
        }
    }

    /// MNIST file names under `dir`.
    pub fn mnist(dir: impl Into<PathBuf>, train_limit: Option<usize>, test_limit: Option<usize>) -> Self {
        let dir = dir.into();
        DataSource::Idx {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
            train_limit,
            test_limit,
        }
    }
}

fn truncate(ds: Dataset, limit: Option<usize>) -> Result<Dataset> {
    match limit {
        Some(n) if n < ds.n() => ds.subset(&(0..n).collect::<Vec<_>>()),
        _ => Ok(ds),
    }
}

fn with_classes(ds: Dataset, k: usize) -> Result<Dataset> {
    if ds.k() == k {
        return Ok(ds);
    }
    Dataset::from_parts(
        ds.features().to_owned(),
        ds.labels().to_vec(),
        ds.oracle_labels().map(<[usize]>::to_vec),
        k,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Training {
    Lgd(LgdConfig),
    Relabel(RelabelConfig),
}

impl Training {
    pub fn inner(&self) -> &LgdConfig {
        match self {
            Training::Lgd(c) => c,
            Training::Relabel(c) => &c.inner,
        }
    }

    fn inner_mut(&mut self) -> &mut LgdConfig {
        match self {
            Training::Lgd(c) => c,
            Training::Relabel(c) => &mut c.inner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// `None` trains on the clean labels.
    pub noise: Option<NoiseSpec>,
    pub training: Training,
    pub repeats: usize,
    pub seed: u64,
    /// Withhold all oracle labels; no held-out accuracies are reported.
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }

    /// Feasibility of the configured noise at the configured selection rate.
    pub fn feasibility(&self, k: usize) -> Option<theory::FeasibilityReport> {
        let inner = self.training.inner();
        self.noise
            .as_ref()
            .map(|noise| theory::check_noise(noise, k, inner.beta, inner.delta))
    }
}

/// Per-repeat outcome. Accuracies are on the held-out set and absent in
/// strict mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub noise_seed: u64,
    pub run_seed: u64,
    pub peak_epoch: usize,
    pub peak_lor: f64,
    pub model_iteration: usize,
    /// Accuracy of the LoR-selected model.
    pub selected_test_acc: Option<f64>,
    /// Best per-epoch accuracy, i.e. what a clean validation set would pick.
    pub oracle_best_test_acc: Option<f64>,
    pub oracle_best_epoch: Option<usize>,
    pub final_epoch_test_acc: Option<f64>,
    /// Oracle agreement of training labels, initial then after each relabel.
    pub label_agreement: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatResult>,
    pub selected_test_accs: Vec<f64>,
    pub mean_test_acc: Option<f64>,
    /// Sample standard deviation; 0 for a single repeat.
    pub std_test_acc: Option<f64>,
    pub peak_epochs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: RunSummary,
    /// Traces per repeat (one per relabel iteration).
    pub traces: Vec<Vec<LoRTrace>>,
    pub checkpoints: Vec<Checkpoint>,
}

pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

/// Loads the configured data and runs every repeat.
pub fn run_noise_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (train, test) = cfg.data.load()?;
    run_noise_experiment_on(cfg, &train, &test)
}

/// Runs every repeat on already-loaded clean data. Each repeat gets its own
/// noise draw, reverse split, initialisation and shuffling.
pub fn run_noise_experiment_on(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if let Some(report) = cfg.feasibility(train.k()) {
        if !report.feasible {
            return Err(Error::Infeasible(Box::new(report)));
        }
    }

    let mut training = cfg.training.clone();
    {
        let inner = training.inner_mut();
        inner.declared_noise = cfg.noise.as_ref().map(|n| DeclaredNoise {
            kind: n.source.kind(),
            eta: n.eta,
        });
        inner.record_oracle = !cfg.strict;
    }
    let test = if cfg.strict { None } else { Some(test) };

    let results: Vec<(RepeatResult, Vec<LoRTrace>, Checkpoint)> = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| run_repeat(cfg, &training, train, test, r))
        .collect::<Result<_>>()?;

    let mut repeats = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    let mut checkpoints = Vec::with_capacity(results.len());
    for (res, tr, ck) in results {
        repeats.push(res);
        traces.push(tr);
        checkpoints.push(ck);
    }
    let selected: Vec<f64> = repeats.iter().filter_map(|r| r.selected_test_acc).collect();
    let stats = if selected.len() == repeats.len() { mean_std(&selected) } else { None };
    Ok(ExperimentOutput {
        summary: RunSummary {
            config: cfg.clone(),
            peak_epochs: repeats.iter().map(|r| r.peak_epoch).collect(),
            selected_test_accs: selected,
            mean_test_acc: stats.map(|s| s.0),
            std_test_acc: stats.map(|s| s.1),
            repeats,
        },
        traces,
        checkpoints,
    })
}

fn run_repeat(
    cfg: &ExperimentConfig,
    training: &Training,
    clean: &Dataset,
    test: Option<&Dataset>,
    repeat: usize,
) -> Result<(RepeatResult, Vec<LoRTrace>, Checkpoint)> {
    let noise_seed = rng::derive_indexed(cfg.seed, "noise", repeat as u64);
    let run_seed = rng::derive_indexed(cfg.seed, "run", repeat as u64);
    let noisy = match &cfg.noise {
        Some(spec) => data::inject_noise(clean, spec, noise_seed)?,
        None => clean.clone(),
    };
    let noisy = if cfg.strict { noisy.without_oracle() } else { noisy };
    let diag = test.map_or_else(Diagnostics::none, Diagnostics::with_test_set);

    let (checkpoint, traces, model_iteration, label_agreement) = match training {
        Training::Lgd(inner) => {
            let run = lgd::lgd_train(&noisy, inner, run_seed, diag)?;
            let agreement = if inner.record_oracle {
                noisy.oracle_agreement().into_iter().collect()
            } else {
                Vec::new()
            };
            (run.checkpoint, vec![run.trace], 0, agreement)
        }
        Training::Relabel(rc) => {
            let run = lgd::lgd_relabel_train(&noisy, rc, run_seed, diag)?;
            (run.model, run.traces, run.model_iteration, run.label_agreement)
        }
    };

    let selected_test_acc = match test.and_then(|t| t.oracle_labels().map(|o| (t, o))) {
        Some((t, truth)) => Some(nn::accuracy(&checkpoint.params, t.features(), truth)?),
        None => None,
    };
    let oracle_best = traces
        .iter()
        .filter_map(|t| t.oracle_best().copied())
        .fold(None::<lgd::EpochRecord>, |best, r| match best {
            Some(b) if b.oracle_test_acc >= r.oracle_test_acc => Some(b),
            _ => Some(r),
        });
    let final_epoch_test_acc = traces.last().and_then(|t| t.records.last()).and_then(|r| r.oracle_test_acc);

    Ok((
        RepeatResult {
            repeat,
            noise_seed,
            run_seed,
            peak_epoch: checkpoint.epoch,
            peak_lor: checkpoint.lor,
            model_iteration,
            selected_test_acc,
            oracle_best_test_acc: oracle_best.and_then(|r| r.oracle_test_acc),
            oracle_best_epoch: oracle_best.map(|r| r.epoch),
            final_epoch_test_acc,
            label_agreement,
        },
        traces,
        checkpoint,
    ))
}

/// Ordinary training on every sample with no reverse split. Returns held-out
/// accuracy after each epoch; the baseline for clean-label runs.
pub fn plain_train(
    train: &Dataset,
    test: &Dataset,
    hidden: &[usize],
    loss: &LossSpec,
    hyper: &TrainHyper,
    epochs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let truth = test
        .oracle_labels()
        .ok_or_else(|| Error::Precondition("baseline needs held-out oracle labels".into()))?;
    let mut dims = vec![train.d()];
    dims.extend(hidden);
    dims.push(train.k());
    let mut params = nn::init_params(&dims, rng::derive(seed, "init"))?;
    let mut rng = rng::rng(rng::derive(seed, "shuffle"));
    let mut order: Vec<usize> = (0..train.n()).collect();
    let mut accs = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        nn::fit_epoch(
            &mut params,
            train.features(),
            train.labels(),
            &order,
            loss,
            &MixupSpec::default(),
            hyper,
            &mut rng,
        )?;
        accs.push(nn::accuracy(&params, test.features(), truth)?);
    }
    Ok(accs)
}
