//! Feed-forward ReLU classifier with a softmax head, trained by plain
//! mini-batch SGD.

mod loss;
mod mlp;
mod train;

pub use loss::{loss, loss_soft, one_hot, LossSpec, CCE_CLAMP};
pub use mlp::{backward, backward_soft, forward, init_params, sgd_step, Dense, Gradients, Mlp};
pub use train::{
    accuracy, dropout_mask, fit_epoch, mixup_batch, predict, sample_mixup_lambda, MixupSpec,
    TrainHyper,
};
