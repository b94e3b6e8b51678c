use serde::{Deserialize, Serialize};

use crate::nn::{Activation, LayerSpec, NnError};
use crate::seq_encoding::{ALPHABET_SIZE, MAX_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    FullyConnected,
    Recurrent,
}

impl ModelKind {
    pub fn tag(self) -> u8 {
        match self {
            ModelKind::FullyConnected => 1,
            ModelKind::Recurrent => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(ModelKind::FullyConnected),
            2 => Some(ModelKind::Recurrent),
            _ => None,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::FullyConnected => "fc",
            ModelKind::Recurrent => "recurrent",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fc" | "fully_connected" => Ok(ModelKind::FullyConnected),
            "recurrent" | "lstm" => Ok(ModelKind::Recurrent),
            other => Err(format!("unknown model kind {other:?} (expected fc or recurrent)")),
        }
    }
}

/// Hyper-parameters of the fully connected model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcConfig {
    pub max_len: usize,
    /// Units of the dense layers in each protein branch, each followed by batch norm.
    pub branch_units: Vec<usize>,
    pub head_units: usize,
}

impl Default for FcConfig {
    fn default() -> Self {
        Self {
            max_len: MAX_LEN,
            branch_units: vec![20, 20],
            head_units: 20,
        }
    }
}

impl FcConfig {
    pub fn with_max_len(max_len: usize) -> Self {
        Self {
            max_len,
            ..Self::default()
        }
    }

    pub fn branch_specs(&self) -> Vec<LayerSpec> {
        let mut specs = vec![LayerSpec::Flatten];
        for &units in &self.branch_units {
            specs.push(LayerSpec::Dense {
                units,
                activation: Activation::Relu,
            });
            specs.push(LayerSpec::BatchNorm);
        }
        specs
    }

    pub fn head_specs(&self) -> Vec<LayerSpec> {
        head_specs(self.head_units)
    }
}

/// Hyper-parameters of the convolution + LSTM model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrentConfig {
    pub max_len: usize,
    pub conv_blocks: usize,
    pub filters: usize,
    pub kernel_size: usize,
    pub pool_size: usize,
    pub lstm_units: usize,
    pub head_units: usize,
}

impl Default for RecurrentConfig {
    fn default() -> Self {
        Self {
            max_len: MAX_LEN,
            conv_blocks: 3,
            filters: 5,
            kernel_size: 20,
            pool_size: 3,
            lstm_units: 32,
            head_units: 25,
        }
    }
}

impl RecurrentConfig {
    /// Same layer sequence with a smaller kernel and pool so the branch fits
    /// `max_len`. The largest kernel up to 20 and pool up to 3 that leave at
    /// least one LSTM step are chosen, preferring larger kernels.
    pub fn scaled(max_len: usize) -> Result<Self, NnError> {
        let base = Self::default();
        for kernel_size in (1..=base.kernel_size).rev() {
            for pool_size in (1..=base.pool_size).rev() {
                let cfg = Self {
                    max_len,
                    kernel_size,
                    pool_size,
                    ..base.clone()
                };
                if cfg.shape_chain().is_ok() {
                    return Ok(cfg);
                }
            }
        }
        Err(NnError::InputTooShort {
            len: max_len,
            needed: base.conv_blocks,
        })
    }

    pub fn branch_specs(&self) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        for _ in 0..self.conv_blocks {
            specs.push(LayerSpec::Conv1D {
                filters: self.filters,
                kernel_size: self.kernel_size,
                stride: 1,
                activation: Activation::Relu,
            });
            specs.push(LayerSpec::MaxPool1D {
                pool_size: self.pool_size,
            });
            specs.push(LayerSpec::BatchNorm);
        }
        specs.push(LayerSpec::Lstm {
            units: self.lstm_units,
        });
        specs
    }

    pub fn head_specs(&self) -> Vec<LayerSpec> {
        head_specs(self.head_units)
    }

    /// Per-sample output shape after each branch layer.
    pub fn shape_chain(&self) -> Result<Vec<Vec<usize>>, NnError> {
        shape_chain(&self.branch_specs(), &[self.max_len, ALPHABET_SIZE])
    }
}

fn head_specs(head_units: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Dense {
            units: head_units,
            activation: Activation::Relu,
        },
        LayerSpec::BatchNorm,
        LayerSpec::Dense {
            units: 1,
            activation: Activation::Sigmoid,
        },
    ]
}

pub(crate) fn shape_chain(specs: &[LayerSpec], input: &[usize]) -> Result<Vec<Vec<usize>>, NnError> {
    let mut shapes = Vec::with_capacity(specs.len());
    let mut current = input.to_vec();
    for spec in specs {
        current = spec.output_shape(&current)?;
        shapes.push(current.clone());
    }
    Ok(shapes)
}

/// Architecture of a model, enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    FullyConnected(FcConfig),
    Recurrent(RecurrentConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::FullyConnected(_) => ModelKind::FullyConnected,
            ModelConfig::Recurrent(_) => ModelKind::Recurrent,
        }
    }

    pub fn max_len(&self) -> usize {
        match self {
            ModelConfig::FullyConnected(c) => c.max_len,
            ModelConfig::Recurrent(c) => c.max_len,
        }
    }

    /// Full-size architecture for `kind` at the default padded length.
    pub fn standard(kind: ModelKind) -> Self {
        match kind {
            ModelKind::FullyConnected => ModelConfig::FullyConnected(FcConfig::default()),
            ModelKind::Recurrent => ModelConfig::Recurrent(RecurrentConfig::default()),
        }
    }
}
