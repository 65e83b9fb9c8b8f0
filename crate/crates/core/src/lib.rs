//! Limited gradient descent (LGD) for learning with noisy labels.
//!
//! A random fraction of the training set has its labels cyclically shifted to
//! form a *reverse pattern*. While training, the ratio of leftover accuracy to
//! reverse accuracy (LoR) tracks how well the main pattern is being learned
//! relative to everything else, and its peak selects the checkpoint. No clean
//! validation set is needed.
//!
//! Modules:
//! - [`data`]: datasets, IDX loading, label-noise injection, reverse splits.
//! - [`theory`]: closed-form feasibility bounds and expected pattern censuses.
//! - [`nn`]: a small ReLU MLP with softmax output, CCE/MAE/Lq losses, SGD, mixup.
//! - [`lgd`]: LoR-peak training and the relabeling loop.
//! - [`harness`]: experiment orchestration and result emission.

pub mod data;
pub mod error;
pub mod harness;
pub mod lgd;
pub mod nn;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
