use std::fmt;

use serde::{Deserialize, Serialize};

use super::batchnorm::{BatchNorm, BatchNormCache};
use super::conv::{Conv1d, ConvCache};
use super::dense::{Dense, DenseCache};
use super::lstm::{Lstm, LstmCache};
use super::pool::{MaxPool1d, PoolCache};
use super::{activation_backward, activation_forward, Activation, Activations, NnError, Parameter, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

/// Kind and hyper-parameters of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Dense { units: usize, activation: Activation },
    Conv1D { filters: usize, kernel_size: usize, stride: usize, activation: Activation },
    MaxPool1D { pool_size: usize },
    BatchNorm,
    Lstm { units: usize },
    Flatten,
    Concat,
    Activation(Activation),
}

impl LayerSpec {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |msg: &str| Err(NnError::InvalidHyperParameter(format!("{self}: {msg}")));
        match *self {
            LayerSpec::Dense { units: 0, .. } => bad("units must be positive"),
            LayerSpec::Conv1D { filters, kernel_size, stride, .. } => {
                if filters == 0 || kernel_size == 0 {
                    bad("filters and kernel size must be positive")
                } else if stride != 1 {
                    bad("only stride 1 is supported")
                } else {
                    Ok(())
                }
            }
            LayerSpec::MaxPool1D { pool_size: 0 } => bad("pool size must be at least 1"),
            LayerSpec::Lstm { units: 0 } => bad("units must be positive"),
            _ => Ok(()),
        }
    }

    /// Per-sample output shape for a per-sample input shape. `Concat` doubles
    /// its (single-branch) input, as both branches have equal shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        self.validate()?;
        let seq = |what: &str| -> Result<(usize, usize), NnError> {
            match input {
                [len, ch] => Ok((*len, *ch)),
                _ => Err(NnError::ShapeMismatch(format!(
                    "{what} needs a (length, channels) input, got {input:?}"
                ))),
            }
        };
        match *self {
            LayerSpec::Dense { units, .. } => match input {
                [_] => Ok(vec![units]),
                _ => Err(NnError::ShapeMismatch(format!("dense needs a vector input, got {input:?}"))),
            },
            LayerSpec::Conv1D { filters, kernel_size, .. } => {
                let (len, _) = seq("conv1d")?;
                if len < kernel_size {
                    return Err(NnError::InputTooShort { len, needed: kernel_size });
                }
                Ok(vec![len - kernel_size + 1, filters])
            }
            LayerSpec::MaxPool1D { pool_size } => {
                let (len, ch) = seq("max pooling")?;
                if len < pool_size {
                    return Err(NnError::InputTooShort { len, needed: pool_size });
                }
                Ok(vec![len / pool_size, ch])
            }
            LayerSpec::Lstm { units } => {
                seq("lstm")?;
                Ok(vec![units])
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Concat => match input {
                [n] => Ok(vec![2 * n]),
                _ => Err(NnError::ShapeMismatch(format!("concat needs vector inputs, got {input:?}"))),
            },
            LayerSpec::BatchNorm | LayerSpec::Activation(_) => Ok(input.to_vec()),
        }
    }

    /// Parameter count for a per-sample input shape, moving statistics included.
    pub fn param_count(&self, input: &[usize]) -> usize {
        let last = input.last().copied().unwrap_or(0);
        match *self {
            LayerSpec::Dense { units, .. } => last * units + units,
            LayerSpec::Conv1D { filters, kernel_size, .. } => kernel_size * last * filters + filters,
            LayerSpec::BatchNorm => 4 * last,
            LayerSpec::Lstm { units } => 4 * (last * units + units * units + units),
            _ => 0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "Fully connected",
            LayerSpec::Conv1D { .. } => "Convolution 1D",
            LayerSpec::MaxPool1D { .. } => "MaxPooling 1D",
            LayerSpec::BatchNorm => "Batch normalization",
            LayerSpec::Lstm { .. } => "LSTM",
            LayerSpec::Flatten => "Flatten",
            LayerSpec::Concat => "Concatenation",
            LayerSpec::Activation(_) => "Activation",
        }
    }

    pub fn hyper_parameters(&self) -> String {
        match *self {
            LayerSpec::Dense { units, activation } => {
                format!("Units={units}, Activation={}", activation.name())
            }
            LayerSpec::Conv1D { filters, kernel_size, stride, activation } => format!(
                "Filters={filters}, Kernel size={kernel_size}, Stride={stride}, Activation={}",
                activation.name()
            ),
            LayerSpec::MaxPool1D { pool_size } => format!("Pool size={pool_size}"),
            LayerSpec::Lstm { units } => format!("Units={units}, Activation=tanh"),
            LayerSpec::Activation(a) => format!("Activation={}", a.name()),
            _ => "-".to_string(),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.kind_name(), self.hyper_parameters())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flatten {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationLayer {
    pub name: String,
    pub kind: Activation,
}

/// One layer of a branch or head, owning its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv1D(Conv1d),
    MaxPool1D(MaxPool1d),
    BatchNorm(BatchNorm),
    Lstm(Lstm),
    Flatten(Flatten),
    Activation(ActivationLayer),
}

/// What a layer's backward pass needs from its forward pass.
#[derive(Debug, Clone)]
pub enum LayerCache {
    Dense(DenseCache),
    Conv1D(ConvCache),
    MaxPool1D(PoolCache),
    BatchNorm(BatchNormCache),
    Lstm(LstmCache),
    Flatten(Vec<usize>),
    Activation(Tensor),
}

fn dense_input<'a>(name: &str, input: &'a Activations) -> Result<std::borrow::Cow<'a, Tensor>, NnError> {
    match input {
        Activations::Dense(t) => Ok(std::borrow::Cow::Borrowed(t)),
        Activations::OneHot(o) if !o.is_flat() => Ok(std::borrow::Cow::Owned(o.to_dense())),
        Activations::OneHot(_) => Err(NnError::ShapeMismatch(format!(
            "{name}: flattened one-hot input is only accepted by dense layers"
        ))),
    }
}

impl Layer {
    pub fn name(&self) -> &str {
        match self {
            Layer::Dense(l) => &l.name,
            Layer::Conv1D(l) => &l.name,
            Layer::MaxPool1D(l) => &l.name,
            Layer::BatchNorm(l) => &l.name,
            Layer::Lstm(l) => &l.name,
            Layer::Flatten(l) => &l.name,
            Layer::Activation(l) => &l.name,
        }
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Dense(l) => LayerSpec::Dense { units: l.units, activation: l.activation },
            Layer::Conv1D(l) => LayerSpec::Conv1D {
                filters: l.filters,
                kernel_size: l.kernel_size,
                stride: 1,
                activation: l.activation,
            },
            Layer::MaxPool1D(l) => LayerSpec::MaxPool1D { pool_size: l.pool_size },
            Layer::BatchNorm(_) => LayerSpec::BatchNorm,
            Layer::Lstm(l) => LayerSpec::Lstm { units: l.units },
            Layer::Flatten(_) => LayerSpec::Flatten,
            Layer::Activation(l) => LayerSpec::Activation(l.kind),
        }
    }

    pub fn params(&self) -> Vec<&Parameter> {
        match self {
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            Layer::Conv1D(l) => vec![&l.weight, &l.bias],
            Layer::BatchNorm(l) => vec![&l.gamma, &l.beta, &l.moving_mean, &l.moving_var],
            Layer::Lstm(l) => vec![&l.kernel, &l.recurrent, &l.bias],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        match self {
            Layer::Dense(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Conv1D(l) => vec![&mut l.weight, &mut l.bias],
            Layer::BatchNorm(l) => vec![&mut l.gamma, &mut l.beta, &mut l.moving_mean, &mut l.moving_var],
            Layer::Lstm(l) => vec![&mut l.kernel, &mut l.recurrent, &mut l.bias],
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn forward(&mut self, input: &Activations, mode: Mode) -> Result<(Activations, LayerCache), NnError> {
        Ok(match self {
            Layer::Dense(l) => {
                let (y, c) = l.forward(input)?;
                (y.into(), LayerCache::Dense(c))
            }
            Layer::Conv1D(l) => {
                let (y, c) = l.forward(input)?;
                (y.into(), LayerCache::Conv1D(c))
            }
            Layer::MaxPool1D(l) => {
                let x = dense_input(&l.name, input)?;
                let (y, c) = l.forward(&x)?;
                (y.into(), LayerCache::MaxPool1D(c))
            }
            Layer::BatchNorm(l) => {
                let x = dense_input(&l.name, input)?;
                let (y, c) = l.forward(&x, mode)?;
                (y.into(), LayerCache::BatchNorm(c))
            }
            Layer::Lstm(l) => {
                let x = dense_input(&l.name, input)?;
                let (y, c) = l.forward(&x)?;
                (y.into(), LayerCache::Lstm(c))
            }
            Layer::Flatten(_) => {
                let mut shape = vec![input.batch()];
                shape.extend(input.sample_shape());
                let out = match input {
                    Activations::Dense(t) => {
                        Activations::Dense(flatten(t)?)
                    }
                    Activations::OneHot(o) => Activations::OneHot(o.flattened()),
                };
                (out, LayerCache::Flatten(shape))
            }
            Layer::Activation(l) => {
                let x = dense_input(&l.name, input)?;
                let y = activation_forward(&x, l.kind);
                (y.clone().into(), LayerCache::Activation(y))
            }
        })
    }

    /// Accumulates parameter gradients and returns the input gradient, or
    /// `None` when it was not requested or the input was one-hot.
    pub fn backward(
        &mut self,
        cache: &LayerCache,
        grad_output: &Tensor,
        need_input_grad: bool,
    ) -> Result<Option<Tensor>, NnError> {
        match (self, cache) {
            (Layer::Dense(l), LayerCache::Dense(c)) => l.backward(c, grad_output, need_input_grad),
            (Layer::Conv1D(l), LayerCache::Conv1D(c)) => l.backward(c, grad_output, need_input_grad),
            (Layer::MaxPool1D(l), LayerCache::MaxPool1D(c)) => l.backward(c, grad_output).map(Some),
            (Layer::BatchNorm(l), LayerCache::BatchNorm(c)) => l.backward(c, grad_output).map(Some),
            (Layer::Lstm(l), LayerCache::Lstm(c)) => l.backward(c, grad_output, need_input_grad),
            (Layer::Flatten(_), LayerCache::Flatten(shape)) => {
                grad_output.clone().reshape(shape.clone()).map(Some)
            }
            (Layer::Activation(l), LayerCache::Activation(y)) => {
                Ok(Some(activation_backward(y, grad_output, l.kind)))
            }
            (layer, _) => Err(NnError::ShapeMismatch(format!(
                "{}: cache belongs to another layer kind",
                layer.name()
            ))),
        }
    }
}

/// `(batch, ...)` to `(batch, product)`.
pub fn flatten(input: &Tensor) -> Result<Tensor, NnError> {
    let batch = input.batch();
    let per = input.len().checked_div(batch).unwrap_or(0);
    input.clone().reshape(vec![batch, per])
}

/// Row-wise concatenation of `(batch, m)` and `(batch, n)`.
pub fn concat(a: &Tensor, b: &Tensor) -> Result<Tensor, NnError> {
    let (ba, bb) = (a.batch(), b.batch());
    if ba != bb || a.shape().len() != 2 || b.shape().len() != 2 {
        return Err(NnError::ShapeMismatch(format!(
            "cannot concatenate {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (m, n) = (a.shape()[1], b.shape()[1]);
    let mut data = Vec::with_capacity(ba * (m + n));
    for i in 0..ba {
        data.extend_from_slice(&a.data()[i * m..(i + 1) * m]);
        data.extend_from_slice(&b.data()[i * n..(i + 1) * n]);
    }
    Tensor::from_vec(vec![ba, m + n], data)
}

/// Inverse of [`concat`] for gradients: splits `(batch, m + n)` at column `m`.
pub fn split_columns(grad: &Tensor, m: usize) -> Result<(Tensor, Tensor), NnError> {
    let batch = grad.batch();
    let total = grad.shape().get(1).copied().unwrap_or(0);
    if grad.shape().len() != 2 || m > total {
        return Err(NnError::ShapeMismatch(format!("cannot split {:?} at {m}", grad.shape())));
    }
    let n = total - m;
    let mut a = Vec::with_capacity(batch * m);
    let mut b = Vec::with_capacity(batch * n);
    for row in grad.data().chunks(total.max(1)).take(batch) {
        a.extend_from_slice(&row[..m]);
        b.extend_from_slice(&row[m..]);
    }
    Ok((Tensor::from_vec(vec![batch, m], a)?, Tensor::from_vec(vec![batch, n], b)?))
}
