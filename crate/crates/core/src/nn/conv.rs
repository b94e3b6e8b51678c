use rand::Rng;

use super::activation::{apply_in_place, backprop_in_place, Activation};
use super::init::xavier_uniform_with;
use super::parallel::{chunked_backward, per_sample};
use super::{Activations, NnError, Parameter, Tensor};

/// Stride-1, valid-padding 1-D convolution over `(batch, length, channels)`.
///
/// The kernel is stored as `(kernel, channels, filters)`, so the window
/// `x[t..t + kernel, :]` is a contiguous row vector multiplied by a
/// `(kernel * channels, filters)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub name: String,
    pub in_channels: usize,
    pub filters: usize,
    pub kernel_size: usize,
    pub activation: Activation,
    pub weight: Parameter,
    pub bias: Parameter,
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    input: Activations,
    output: Tensor,
}

impl Conv1d {
    pub fn new<R: Rng>(
        name: &str,
        in_channels: usize,
        filters: usize,
        kernel_size: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let weight = xavier_uniform_with(
            &[kernel_size, in_channels, filters],
            kernel_size * in_channels,
            kernel_size * filters,
            rng,
        );
        Self {
            name: name.to_string(),
            in_channels,
            filters,
            kernel_size,
            activation,
            weight: Parameter::new(format!("{name}/kernel"), weight, true),
            bias: Parameter::new(format!("{name}/bias"), Tensor::zeros(&[filters]), true),
        }
    }

    pub fn param_count(&self) -> usize {
        self.kernel_size * self.in_channels * self.filters + self.filters
    }

    pub fn output_len(&self, len: usize) -> Result<usize, NnError> {
        if len < self.kernel_size {
            return Err(NnError::InputTooShort {
                len,
                needed: self.kernel_size,
            });
        }
        Ok(len - self.kernel_size + 1)
    }

    pub fn forward(&self, input: &Activations) -> Result<(Tensor, ConvCache), NnError> {
        let shape = input.sample_shape();
        if shape.len() != 2 || shape[1] != self.in_channels {
            return Err(NnError::ShapeMismatch(format!(
                "{}: expected (batch, length, {}), got sample shape {shape:?}",
                self.name, self.in_channels
            )));
        }
        let len = shape[0];
        let out_len = self.output_len(len)?;
        let batch = input.batch();
        let (c, f, k) = (self.in_channels, self.filters, self.kernel_size);
        let w = self.weight.value.data();
        let bias = self.bias.value.data();
        let mut out = vec![0.0; batch * out_len * f];
        match input {
            Activations::Dense(x) => {
                let xd = x.data();
                per_sample(&mut out, out_len * f, |b, o| {
                    let xs = &xd[b * len * c..(b + 1) * len * c];
                    for t in 0..out_len {
                        let orow = &mut o[t * f..(t + 1) * f];
                        orow.copy_from_slice(bias);
                        for (j, &xv) in xs[t * c..(t + k) * c].iter().enumerate() {
                            if xv != 0.0 {
                                for (ov, &wv) in orow.iter_mut().zip(&w[j * f..(j + 1) * f]) {
                                    *ov += xv * wv;
                                }
                            }
                        }
                    }
                });
            }
            Activations::OneHot(oh) => {
                let hots = oh.hots();
                per_sample(&mut out, out_len * f, |b, o| {
                    let h = &hots[b];
                    for t in 0..out_len {
                        let orow = &mut o[t * f..(t + 1) * f];
                        orow.copy_from_slice(bias);
                        let end = (t + k).min(h.len());
                        for (pos, &sym) in h.iter().enumerate().take(end).skip(t) {
                            let j = (pos - t) * c + sym as usize;
                            for (ov, &wv) in orow.iter_mut().zip(&w[j * f..(j + 1) * f]) {
                                *ov += wv;
                            }
                        }
                    }
                });
            }
        }
        apply_in_place(&mut out, self.activation);
        let output = Tensor::from_vec(vec![batch, out_len, f], out)?;
        Ok((
            output.clone(),
            ConvCache {
                input: input.clone(),
                output,
            },
        ))
    }

    pub fn backward(
        &mut self,
        cache: &ConvCache,
        grad_output: &Tensor,
        need_input_grad: bool,
    ) -> Result<Option<Tensor>, NnError> {
        if grad_output.shape() != cache.output.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "{}: gradient {:?} vs output {:?}",
                self.name,
                grad_output.shape(),
                cache.output.shape()
            )));
        }
        let batch = cache.output.batch();
        let out_len = cache.output.shape()[1];
        let (c, f, k) = (self.in_channels, self.filters, self.kernel_size);
        let len = out_len + k - 1;
        let wlen = k * c * f;
        let mut delta = grad_output.data().to_vec();
        backprop_in_place(&mut delta, cache.output.data(), self.activation);
        let delta = &delta;
        let w = self.weight.value.data();

        let want_dx = need_input_grad && cache.input.as_dense().is_some();
        let mut dx = if want_dx {
            vec![0.0; batch * len * c]
        } else {
            Vec::new()
        };

        let grads = match &cache.input {
            Activations::Dense(x) => {
                let xd = x.data();
                chunked_backward(
                    batch,
                    wlen + f,
                    want_dx.then_some((dx.as_mut_slice(), len * c)),
                    |samples, partial, dx_chunk| {
                        let (dw, db) = partial.split_at_mut(wlen);
                        let first = samples.start;
                        for b in samples {
                            let xs = &xd[b * len * c..(b + 1) * len * c];
                            let ds = &delta[b * out_len * f..(b + 1) * out_len * f];
                            for t in 0..out_len {
                                let drow = &ds[t * f..(t + 1) * f];
                                for (g, d) in db.iter_mut().zip(drow) {
                                    *g += d;
                                }
                                for (j, &xv) in xs[t * c..(t + k) * c].iter().enumerate() {
                                    if xv != 0.0 {
                                        for (g, &d) in dw[j * f..(j + 1) * f].iter_mut().zip(drow)
                                        {
                                            *g += xv * d;
                                        }
                                    }
                                }
                                if !dx_chunk.is_empty() {
                                    let base = (b - first) * len * c + t * c;
                                    for j in 0..k * c {
                                        dx_chunk[base + j] += w[j * f..(j + 1) * f]
                                            .iter()
                                            .zip(drow)
                                            .map(|(a, d)| a * d)
                                            .sum::<f64>();
                                    }
                                }
                            }
                        }
                    },
                )
            }
            Activations::OneHot(oh) => {
                let hots = oh.hots();
                chunked_backward(batch, wlen + f, None, |samples, partial, _| {
                    let (dw, db) = partial.split_at_mut(wlen);
                    for b in samples {
                        let h = &hots[b];
                        let ds = &delta[b * out_len * f..(b + 1) * out_len * f];
                        for t in 0..out_len {
                            let drow = &ds[t * f..(t + 1) * f];
                            for (g, d) in db.iter_mut().zip(drow) {
                                *g += d;
                            }
                            let end = (t + k).min(h.len());
                            for (pos, &sym) in h.iter().enumerate().take(end).skip(t) {
                                let j = (pos - t) * c + sym as usize;
                                for (g, &d) in dw[j * f..(j + 1) * f].iter_mut().zip(drow) {
                                    *g += d;
                                }
                            }
                        }
                    }
                })
            }
        };
        super::parallel::add_into(self.weight.grad.data_mut(), &grads[..wlen]);
        super::parallel::add_into(self.bias.grad.data_mut(), &grads[wlen..]);

        if want_dx {
            Ok(Some(Tensor::from_vec(vec![batch, len, c], dx)?))
        } else {
            Ok(None)
        }
    }
}
