use rand::Rng;

use super::activation::{apply_in_place, backprop_in_place, Activation};
use super::init::xavier_uniform_with;
use super::parallel::per_sample;
use super::{Activations, NnError, Parameter, Tensor};

/// Fully connected layer `y = act(x·W + b)` with `W` of shape `(inputs, units)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub name: String,
    pub inputs: usize,
    pub units: usize,
    pub activation: Activation,
    pub weight: Parameter,
    pub bias: Parameter,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Activations,
    output: Tensor,
}

impl Dense {
    pub fn new<R: Rng>(
        name: &str,
        inputs: usize,
        units: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let weight = xavier_uniform_with(&[inputs, units], inputs, units, rng);
        Self {
            name: name.to_string(),
            inputs,
            units,
            activation,
            weight: Parameter::new(format!("{name}/kernel"), weight, true),
            bias: Parameter::new(format!("{name}/bias"), Tensor::zeros(&[units]), true),
        }
    }

    pub fn param_count(&self) -> usize {
        self.inputs * self.units + self.units
    }

    pub fn forward(&self, input: &Activations) -> Result<(Tensor, DenseCache), NnError> {
        let batch = input.batch();
        let units = self.units;
        let w = self.weight.value.data();
        let bias = self.bias.value.data();
        let mut out = vec![0.0; batch * units];
        match input {
            Activations::Dense(x) => {
                if x.shape() != [batch, self.inputs] {
                    return Err(NnError::ShapeMismatch(format!(
                        "{}: expected (batch, {}), got {:?}",
                        self.name,
                        self.inputs,
                        x.shape()
                    )));
                }
                let xd = x.data();
                let n = self.inputs;
                per_sample(&mut out, units, |b, o| {
                    o.copy_from_slice(bias);
                    for (k, &xv) in xd[b * n..(b + 1) * n].iter().enumerate() {
                        if xv != 0.0 {
                            for (oj, &wj) in o.iter_mut().zip(&w[k * units..(k + 1) * units]) {
                                *oj += xv * wj;
                            }
                        }
                    }
                });
            }
            Activations::OneHot(oh) => {
                if !oh.is_flat() || oh.rows() * oh.width() != self.inputs {
                    return Err(NnError::ShapeMismatch(format!(
                        "{}: one-hot input {:?} does not flatten to {}",
                        self.name,
                        oh.sample_shape(),
                        self.inputs
                    )));
                }
                let width = oh.width();
                let hots = oh.hots();
                per_sample(&mut out, units, |b, o| {
                    o.copy_from_slice(bias);
                    for (r, &c) in hots[b].iter().enumerate() {
                        let k = r * width + c as usize;
                        for (oj, &wj) in o.iter_mut().zip(&w[k * units..(k + 1) * units]) {
                            *oj += wj;
                        }
                    }
                });
            }
        }
        apply_in_place(&mut out, self.activation);
        let output = Tensor::from_vec(vec![batch, units], out)?;
        Ok((
            output.clone(),
            DenseCache {
                input: input.clone(),
                output,
            },
        ))
    }

    /// Accumulates into the parameter gradients; returns the input gradient
    /// when requested and the input was dense.
    pub fn backward(
        &mut self,
        cache: &DenseCache,
        grad_output: &Tensor,
        need_input_grad: bool,
    ) -> Result<Option<Tensor>, NnError> {
        let batch = cache.output.batch();
        let units = self.units;
        if grad_output.shape() != cache.output.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "{}: gradient {:?} vs output {:?}",
                self.name,
                grad_output.shape(),
                cache.output.shape()
            )));
        }
        let mut delta = grad_output.data().to_vec();
        backprop_in_place(&mut delta, cache.output.data(), self.activation);

        let db = self.bias.grad.data_mut();
        for row in delta.chunks(units) {
            for (g, d) in db.iter_mut().zip(row) {
                *g += d;
            }
        }

        let dw = self.weight.grad.data_mut();
        match &cache.input {
            Activations::Dense(x) => {
                let n = self.inputs;
                let xd = x.data();
                for b in 0..batch {
                    let drow = &delta[b * units..(b + 1) * units];
                    for (k, &xv) in xd[b * n..(b + 1) * n].iter().enumerate() {
                        if xv != 0.0 {
                            for (g, &d) in dw[k * units..(k + 1) * units].iter_mut().zip(drow) {
                                *g += xv * d;
                            }
                        }
                    }
                }
            }
            Activations::OneHot(oh) => {
                let width = oh.width();
                for (b, hots) in oh.hots().iter().enumerate() {
                    let drow = &delta[b * units..(b + 1) * units];
                    for (r, &c) in hots.iter().enumerate() {
                        let k = r * width + c as usize;
                        for (g, &d) in dw[k * units..(k + 1) * units].iter_mut().zip(drow) {
                            *g += d;
                        }
                    }
                }
            }
        }

        if !need_input_grad || cache.input.as_dense().is_none() {
            return Ok(None);
        }
        let n = self.inputs;
        let w = self.weight.value.data();
        let mut dx = vec![0.0; batch * n];
        per_sample(&mut dx, n, |b, row| {
            let drow = &delta[b * units..(b + 1) * units];
            for (k, v) in row.iter_mut().enumerate() {
                *v = w[k * units..(k + 1) * units]
                    .iter()
                    .zip(drow)
                    .map(|(a, d)| a * d)
                    .sum();
            }
        });
        Ok(Some(Tensor::from_vec(vec![batch, n], dx)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn identity_sized_layer() {
        let mut layer = Dense::new("d", 1, 1, Activation::Linear, &mut seeded(0));
        layer.weight.value = Tensor::from_vec(vec![1, 1], vec![1.0]).unwrap();
        let x = Tensor::from_vec(vec![1, 1], vec![3.5]).unwrap();
        let (y, _) = layer.forward(&x.into()).unwrap();
        assert_eq!(y.data(), &[3.5]);
    }

    #[test]
    fn first_layer_count() {
        let layer = Dense::new("d", 27_984, 20, Activation::Relu, &mut seeded(0));
        assert_eq!(layer.param_count(), 559_700);
    }

    #[test]
    fn rejects_wrong_width() {
        let layer = Dense::new("d", 3, 2, Activation::Linear, &mut seeded(0));
        let x = Tensor::zeros(&[2, 4]);
        assert!(matches!(
            layer.forward(&x.into()),
            Err(NnError::ShapeMismatch(_))
        ));
    }
}
