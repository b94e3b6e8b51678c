//! A small differentiable layer library: exactly the layers the two
//! interaction models need, each with a hand-written backward pass.
//!
//! All arithmetic is `f64`. Layers consume a leading batch axis. The first
//! layer of a branch may receive one-hot sequences directly
//! ([`Activations::OneHot`]), which avoids materialising the mostly-zero input
//! matrices.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod init;
mod input;
mod layer;
mod lstm;
mod param;
mod parallel;
mod pool;
mod tensor;

use thiserror::Error;

pub use activation::{activation_backward, activation_forward, sigmoid, Activation};
pub use batchnorm::{BatchNorm, BatchNormCache, BN_EPSILON, BN_MOMENTUM};
pub use conv::{Conv1d, ConvCache};
pub use dense::{Dense, DenseCache};
pub use init::{xavier_limit, xavier_uniform_init, xavier_uniform_with};
pub use input::{Activations, OneHotBatch};
pub use layer::{concat, flatten, split_columns, ActivationLayer, Flatten, Layer, LayerCache, LayerSpec, Mode};
pub use lstm::{Lstm, LstmCache};
pub use param::Parameter;
pub use pool::{MaxPool1d, PoolCache};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("input of length {len} is shorter than the required {needed}")]
    InputTooShort { len: usize, needed: usize },
    #[error("batch normalization {0} used in inference mode before any training pass")]
    InferBeforeTrain(String),
    #[error("invalid hyper-parameter: {0}")]
    InvalidHyperParameter(String),
    #[error("backward pass requested without a stored training-mode forward pass")]
    NoForwardState,
}
