use rand::Rng;
use serde::Serialize;

use super::config::{shape_chain, FcConfig, ModelConfig, ModelKind, RecurrentConfig};
use crate::nn::{
    concat, split_columns, Activations, BatchNorm, Conv1d, Dense, Flatten, Layer, LayerCache,
    LayerSpec, Lstm, MaxPool1d, Mode, NnError, OneHotBatch, Parameter, Tensor,
};
use crate::rng::seeded;
use crate::seq_encoding::ALPHABET_SIZE;

/// A feature-extraction stack applied to one protein.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub name: String,
    pub layers: Vec<Layer>,
}

fn build_layers<R: Rng>(
    scope: &str,
    specs: &[LayerSpec],
    input: &[usize],
    rng: &mut R,
) -> Result<Vec<Layer>, NnError> {
    let shapes = shape_chain(specs, input)?;
    let mut layers = Vec::with_capacity(specs.len());
    let mut counters = std::collections::BTreeMap::<&str, usize>::new();
    let mut current = input.to_vec();
    for (spec, out_shape) in specs.iter().zip(shapes) {
        let base = match spec {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv1D { .. } => "conv1d",
            LayerSpec::MaxPool1D { .. } => "max_pooling1d",
            LayerSpec::BatchNorm => "batch_normalization",
            LayerSpec::Lstm { .. } => "lstm",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Concat => "concatenate",
            LayerSpec::Activation(_) => "activation",
        };
        let n = counters.entry(base).or_insert(0);
        *n += 1;
        let name = format!("{scope}/{base}_{n}");
        let last = *current.last().unwrap_or(&0);
        let layer = match *spec {
            LayerSpec::Dense { units, activation } => {
                Layer::Dense(Dense::new(&name, last, units, activation, rng))
            }
            LayerSpec::Conv1D {
                filters,
                kernel_size,
                activation,
                ..
            } => Layer::Conv1D(Conv1d::new(&name, last, filters, kernel_size, activation, rng)),
            LayerSpec::MaxPool1D { pool_size } => Layer::MaxPool1D(MaxPool1d::new(&name, pool_size)?),
            LayerSpec::BatchNorm => Layer::BatchNorm(BatchNorm::new(&name, last)),
            LayerSpec::Lstm { units } => Layer::Lstm(Lstm::new(&name, last, units, rng)),
            LayerSpec::Flatten => Layer::Flatten(Flatten { name }),
            LayerSpec::Activation(kind) => {
                Layer::Activation(crate::nn::ActivationLayer { name, kind })
            }
            LayerSpec::Concat => {
                return Err(NnError::InvalidHyperParameter(
                    "concatenation joins branches and cannot sit inside one".into(),
                ))
            }
        };
        layers.push(layer);
        current = out_shape;
    }
    Ok(layers)
}

fn forward_stack(
    layers: &mut [Layer],
    input: &Activations,
    mode: Mode,
) -> Result<(Tensor, Vec<LayerCache>), NnError> {
    let mut tape = Vec::with_capacity(layers.len());
    let mut current = input.clone();
    for layer in layers.iter_mut() {
        let (out, cache) = layer.forward(&current, mode)?;
        tape.push(cache);
        current = out;
    }
    Ok((current.to_dense(), tape))
}

fn backward_stack(
    layers: &mut [Layer],
    tape: &[LayerCache],
    grad: Tensor,
    need_input_grad: bool,
) -> Result<Option<Tensor>, NnError> {
    let mut grad = Some(grad);
    for (i, (layer, cache)) in layers.iter_mut().zip(tape).enumerate().rev() {
        let Some(g) = grad.take() else {
            // One-hot input below this point; only parameter-free layers may remain.
            if layer.param_count() > 0 {
                return Err(NnError::ShapeMismatch(format!(
                    "{} received no output gradient",
                    layer.name()
                )));
            }
            continue;
        };
        grad = layer.backward(cache, &g, i > 0 || need_input_grad)?;
    }
    Ok(grad)
}

impl Branch {
    pub fn forward(&mut self, input: &Activations, mode: Mode) -> Result<(Tensor, Vec<LayerCache>), NnError> {
        forward_stack(&mut self.layers, input, mode)
    }

    pub fn backward(&mut self, tape: &[LayerCache], grad: Tensor) -> Result<(), NnError> {
        backward_stack(&mut self.layers, tape, grad, false).map(|_| ())
    }

    pub fn params(&self) -> impl Iterator<Item = &Parameter> {
        self.layers.iter().flat_map(|l| l.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.layers.iter_mut().flat_map(|l| l.params_mut())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }
}

#[derive(Debug, Clone)]
struct ForwardState {
    tapes: [Vec<LayerCache>; 2],
    branch_width: usize,
    head_tape: Vec<LayerCache>,
}

/// Where a summary row sits in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Input,
    /// One feature-extraction row; `instances` is 1 when both proteins share it.
    Branch { shared: bool, instances: usize },
    Head,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRow {
    pub name: String,
    pub layer: String,
    pub hyper_parameters: String,
    pub params: usize,
    pub output_shape: Vec<usize>,
    pub scope: Scope,
}

/// Layers shared by several model inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SharingGroup {
    pub branch: String,
    pub inputs: Vec<usize>,
    pub layers: Vec<String>,
}

/// A two-input classifier: one branch per protein (or one shared branch),
/// concatenation, then a dense head ending in a sigmoid unit.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    config: ModelConfig,
    branches: Vec<Branch>,
    /// Branch index used for protein A and protein B.
    input_branch: [usize; 2],
    head: Vec<Layer>,
    state: Option<ForwardState>,
}

/// Fully connected model with independent branch weights.
pub fn build_fc_model(config: &FcConfig, seed: u64) -> Result<ModelGraph, NnError> {
    let mut rng = seeded(seed);
    let input = [config.max_len, ALPHABET_SIZE];
    let specs = config.branch_specs();
    let branch_a = Branch {
        name: "protein_a".into(),
        layers: build_layers("protein_a", &specs, &input, &mut rng)?,
    };
    let branch_b = Branch {
        name: "protein_b".into(),
        layers: build_layers("protein_b", &specs, &input, &mut rng)?,
    };
    let width = shape_chain(&specs, &input)?.last().cloned().unwrap_or_default();
    let head_input = LayerSpec::Concat.output_shape(&width)?;
    let head = build_layers("head", &config.head_specs(), &head_input, &mut rng)?;
    Ok(ModelGraph {
        config: ModelConfig::FullyConnected(config.clone()),
        branches: vec![branch_a, branch_b],
        input_branch: [0, 1],
        head,
        state: None,
    })
}

/// Convolution + LSTM model whose single branch serves both proteins.
pub fn build_recurrent_model(config: &RecurrentConfig, seed: u64) -> Result<ModelGraph, NnError> {
    let mut rng = seeded(seed);
    let input = [config.max_len, ALPHABET_SIZE];
    let specs = config.branch_specs();
    let shared = Branch {
        name: "shared".into(),
        layers: build_layers("shared", &specs, &input, &mut rng)?,
    };
    let width = config.shape_chain()?.last().cloned().unwrap_or_default();
    let head_input = LayerSpec::Concat.output_shape(&width)?;
    let head = build_layers("head", &config.head_specs(), &head_input, &mut rng)?;
    Ok(ModelGraph {
        config: ModelConfig::Recurrent(config.clone()),
        branches: vec![shared],
        input_branch: [0, 0],
        head,
        state: None,
    })
}

pub fn build_model(config: &ModelConfig, seed: u64) -> Result<ModelGraph, NnError> {
    match config {
        ModelConfig::FullyConnected(c) => build_fc_model(c, seed),
        ModelConfig::Recurrent(c) => build_recurrent_model(c, seed),
    }
}

impl ModelGraph {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind()
    }

    pub fn max_len(&self) -> usize {
        self.config.max_len()
    }

    pub fn alphabet_size(&self) -> usize {
        ALPHABET_SIZE
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// The branch that processes input `slot` (0 = protein A, 1 = protein B).
    pub fn branch_for_input(&self, slot: usize) -> &Branch {
        &self.branches[self.input_branch[slot]]
    }

    pub fn head(&self) -> &[Layer] {
        &self.head
    }

    pub fn is_shared(&self) -> bool {
        self.input_branch[0] == self.input_branch[1]
    }

    pub fn sharing_groups(&self) -> Vec<SharingGroup> {
        self.branches
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                let inputs: Vec<usize> = (0..2).filter(|&s| self.input_branch[s] == i).collect();
                (inputs.len() > 1).then(|| SharingGroup {
                    branch: b.name.clone(),
                    inputs,
                    layers: b.layers.iter().map(|l| l.name().to_string()).collect(),
                })
            })
            .collect()
    }

    /// All parameters, shared ones once: branches in order, then the head.
    pub fn params(&self) -> Vec<&Parameter> {
        self.branches
            .iter()
            .flat_map(|b| b.params())
            .chain(self.head.iter().flat_map(|l| l.params()))
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.branches
            .iter_mut()
            .flat_map(|b| b.params_mut())
            .chain(self.head.iter_mut().flat_map(|l| l.params_mut()))
            .collect()
    }

    pub fn param(&self, name: &str) -> Option<&Parameter> {
        self.params().into_iter().find(|p| p.name == name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Parameter> {
        self.params_mut().into_iter().find(|p| p.name == name)
    }

    pub fn batch_norms(&self) -> Vec<&BatchNorm> {
        self.branches
            .iter()
            .flat_map(|b| b.layers.iter())
            .chain(self.head.iter())
            .filter_map(|l| match l {
                Layer::BatchNorm(bn) => Some(bn),
                _ => None,
            })
            .collect()
    }

    pub fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm> {
        self.branches
            .iter_mut()
            .flat_map(|b| b.layers.iter_mut())
            .chain(self.head.iter_mut())
            .filter_map(|l| match l {
                Layer::BatchNorm(bn) => Some(bn),
                _ => None,
            })
            .collect()
    }

    /// Total parameter count, moving statistics included and shared layers once.
    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Layer table: input, one branch's rows, concatenation, head.
    pub fn summary(&self) -> Vec<LayerRow> {
        let mut rows = vec![LayerRow {
            name: "input".into(),
            layer: "Input".into(),
            hyper_parameters: format!("Sequence length={}", self.max_len()),
            params: 0,
            output_shape: vec![self.max_len(), ALPHABET_SIZE],
            scope: Scope::Input,
        }];
        let mut shape = vec![self.max_len(), ALPHABET_SIZE];
        let shared = self.is_shared();
        let scope = Scope::Branch {
            shared,
            instances: if shared { 1 } else { 2 },
        };
        let mut push = |layer: &Layer, shape: &mut Vec<usize>, scope: Scope| {
            let spec = layer.spec();
            *shape = spec.output_shape(shape).expect("built models have valid shapes");
            rows.push(LayerRow {
                name: layer.name().to_string(),
                layer: spec.kind_name().to_string(),
                hyper_parameters: spec.hyper_parameters(),
                params: layer.param_count(),
                output_shape: shape.clone(),
                scope,
            });
        };
        for layer in &self.branch_for_input(0).layers {
            push(layer, &mut shape, scope);
        }
        shape = LayerSpec::Concat.output_shape(&shape).expect("vector branch output");
        rows.push(LayerRow {
            name: "concatenate".into(),
            layer: LayerSpec::Concat.kind_name().into(),
            hyper_parameters: "-".into(),
            params: 0,
            output_shape: shape.clone(),
            scope: Scope::Head,
        });
        for layer in &self.head {
            let spec = layer.spec();
            shape = spec.output_shape(&shape).expect("built models have valid shapes");
            rows.push(LayerRow {
                name: layer.name().to_string(),
                layer: spec.kind_name().to_string(),
                hyper_parameters: spec.hyper_parameters(),
                params: layer.param_count(),
                output_shape: shape.clone(),
                scope: Scope::Head,
            });
        }
        rows
    }

    fn check_input(&self, input: &Activations) -> Result<(), NnError> {
        let expected = vec![self.max_len(), ALPHABET_SIZE];
        let got = input.sample_shape();
        if got != expected {
            return Err(NnError::ShapeMismatch(format!(
                "model expects per-protein input {expected:?}, got {got:?}"
            )));
        }
        Ok(())
    }

    /// Interaction probabilities `(batch, 1)` for protein batches `a` and `b`.
    ///
    /// Training mode keeps the intermediate values for [`Self::backward_pair`];
    /// inference mode discards any stored state.
    pub fn forward_pair(
        &mut self,
        a: &Activations,
        b: &Activations,
        mode: Mode,
    ) -> Result<Tensor, NnError> {
        self.state = None;
        if a.batch() != b.batch() {
            return Err(NnError::ShapeMismatch(format!(
                "protein batches differ in size: {} vs {}",
                a.batch(),
                b.batch()
            )));
        }
        if a.batch() == 0 {
            return Err(NnError::ShapeMismatch("empty batch".into()));
        }
        self.check_input(a)?;
        self.check_input(b)?;
        let (ia, ib) = (self.input_branch[0], self.input_branch[1]);
        let (out_a, tape_a) = self.branches[ia].forward(a, mode)?;
        let (out_b, tape_b) = self.branches[ib].forward(b, mode)?;
        let branch_width = out_a.shape()[1];
        let joined = concat(&out_a, &out_b)?;
        let (probs, head_tape) = forward_stack(&mut self.head, &joined.into(), mode)?;
        if mode == Mode::Train {
            self.state = Some(ForwardState {
                tapes: [tape_a, tape_b],
                branch_width,
                head_tape,
            });
        }
        Ok(probs)
    }

    pub fn forward_onehot(&mut self, a: &OneHotBatch, b: &OneHotBatch, mode: Mode) -> Result<Tensor, NnError> {
        self.forward_pair(&Activations::OneHot(a.clone()), &Activations::OneHot(b.clone()), mode)
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Fills every parameter gradient from the gradient of the loss with
    /// respect to the probabilities of the last training-mode forward pass.
    ///
    /// A shared branch receives the protein-A contribution plus the protein-B
    /// contribution, each computed separately and added in that order.
    pub fn backward_pair(&mut self, grad_probs: &Tensor) -> Result<(), NnError> {
        self.backward_pair_contributions(grad_probs).map(|_| ())
    }

    /// As [`Self::backward_pair`], also returning the gradient each input
    /// contributed to the parameters of the branch serving it, in branch
    /// parameter order.
    pub fn backward_pair_contributions(&mut self, grad_probs: &Tensor) -> Result<[Vec<Tensor>; 2], NnError> {
        let state = self.state.take().ok_or(NnError::NoForwardState)?;
        self.zero_grad();
        let grad_joined = backward_stack(&mut self.head, &state.head_tape, grad_probs.clone(), true)?
            .ok_or(NnError::NoForwardState)?;
        let (grad_a, grad_b) = split_columns(&grad_joined, state.branch_width)?;
        let [tape_a, tape_b] = state.tapes;
        let (ia, ib) = (self.input_branch[0], self.input_branch[1]);
        let grads = |b: &Branch| -> Vec<Tensor> { b.params().map(|p| p.grad.clone()).collect() };
        self.branches[ia].backward(&tape_a, grad_a)?;
        let from_a = grads(&self.branches[ia]);
        if ia == ib {
            for p in self.branches[ia].params_mut() {
                p.zero_grad();
            }
        }
        self.branches[ib].backward(&tape_b, grad_b)?;
        let from_b = grads(&self.branches[ib]);
        if ia == ib {
            for (p, ga) in self.branches[ia].params_mut().zip(&from_a) {
                for (g, a) in p.grad.data_mut().iter_mut().zip(ga.data()) {
                    *g += a;
                }
            }
        }
        Ok([from_a, from_b])
    }

    pub fn has_forward_state(&self) -> bool {
        self.state.is_some()
    }
}
