//! The MLP surrogate `f_nn(λ; Θ)`, its optimizer and the training loop.

pub mod adam;
pub mod mlp;
pub mod train;

pub use adam::AdamW;
pub use mlp::{loss_mse, residuals, Dense, Gradients, LossEval, MlpSurrogate, CHECKPOINT_FORMAT};
pub use train::{train, train_with, EpochContext, EpochRecord, TrainConfig, TrainReport};
