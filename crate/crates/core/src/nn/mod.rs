//! From-scratch 1D convolutional autoencoder.
//!
//! Tensors are `(batch, length, channels)` in channels-last layout. The
//! canonical network downsamples 24 → 12 → 6 → 3 with stride-2 "same"
//! convolutions and mirrors back up with transposed convolutions:
//!
//! | layer              | output   | params |
//! |--------------------|----------|--------|
//! | conv 1→16, k7 relu | (12, 16) | 128    |
//! | batch norm         | (12, 16) | 64     |
//! | conv 16→8, k7 relu | (6, 8)   | 904    |
//! | batch norm         | (6, 8)   | 32     |
//! | conv 8→4, k7 relu  | (3, 4)   | 228    |
//! | tconv 4→8, k2 relu | (6, 8)   | 72     |
//! | batch norm         | (6, 8)   | 32     |
//! | tconv 8→16, k7 relu| (12, 16) | 912    |
//! | batch norm         | (12, 16) | 64     |
//! | tconv 16→1, k7     | (24, 1)  | 113    |
//!
//! Batch-norm parameter counts include the running mean and variance; only
//! γ and β are trained.

mod layer;
mod model;
mod optim;
mod tensor;
mod train;
mod window;

pub use layer::{Activation, LayerKind, LayerSpec, Padding};
pub use model::{canonical_architecture, ConvAutoencoder, Gradients, Mode, BN_EPS, BN_MOMENTUM};
pub use optim::{Adam, Sgd};
pub use tensor::Tensor3;
pub use train::{mse_loss, train, EpochLoss, TrainConfig, TrainReport};
pub use window::{make_windows, Normalization, WindowSet};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape { expected: (usize, usize, usize), got: (usize, usize, usize) },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("backward called without a cached train-mode forward pass")]
    NoCache,
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("need at least {needed} windows, got {got}")]
    InsufficientWindows { needed: usize, got: usize },
    #[error("normalization std is zero")]
    DegenerateNormalization,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid architecture: {0}")]
    Architecture(String),
}
