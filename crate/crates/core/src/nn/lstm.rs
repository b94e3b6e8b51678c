use rand::Rng;

use super::activation::sigmoid;
use super::init::xavier_uniform_with;
use super::parallel::{add_into, chunked_backward, per_sample};
use super::{NnError, Parameter, Tensor};

/// LSTM over `(batch, steps, features)` returning the last hidden state `(batch, units)`.
///
/// Gate blocks along the `4 * units` axis are ordered input, forget, cell
/// candidate, output. Gates use the logistic sigmoid; the candidate and the
/// cell output use tanh.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub name: String,
    pub in_features: usize,
    pub units: usize,
    pub kernel: Parameter,
    pub recurrent: Parameter,
    pub bias: Parameter,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    input: Tensor,
    /// Per sample: gate activations `(steps, 4u)`, cells `(steps + 1, u)`, hidden `(steps + 1, u)`.
    trace: Vec<f64>,
    steps: usize,
}

impl Lstm {
    pub fn new<R: Rng>(name: &str, in_features: usize, units: usize, rng: &mut R) -> Self {
        let kernel = xavier_uniform_with(&[in_features, 4 * units], in_features, units, rng);
        let recurrent = xavier_uniform_with(&[units, 4 * units], units, units, rng);
        let mut bias = Tensor::zeros(&[4 * units]);
        bias.data_mut()[units..2 * units].fill(1.0);
        Self {
            name: name.to_string(),
            in_features,
            units,
            kernel: Parameter::new(format!("{name}/kernel"), kernel, true),
            recurrent: Parameter::new(format!("{name}/recurrent_kernel"), recurrent, true),
            bias: Parameter::new(format!("{name}/bias"), bias, true),
        }
    }

    pub fn param_count(&self) -> usize {
        4 * (self.in_features * self.units + self.units * self.units + self.units)
    }

    fn trace_len(&self, steps: usize) -> usize {
        steps * 4 * self.units + 2 * (steps + 1) * self.units
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, LstmCache), NnError> {
        let shape = input.shape();
        if shape.len() != 3 || shape[2] != self.in_features {
            return Err(NnError::ShapeMismatch(format!(
                "{}: expected (batch, steps, {}), got {shape:?}",
                self.name, self.in_features
            )));
        }
        let (batch, steps, c) = (shape[0], shape[1], shape[2]);
        let u = self.units;
        let g4 = 4 * u;
        let w = self.kernel.value.data();
        let r = self.recurrent.value.data();
        let bias = self.bias.value.data();
        let x = input.data();
        let per = self.trace_len(steps);
        let mut trace = vec![0.0; batch * per];
        per_sample(&mut trace, per, |b, tr| {
            let (gates, rest) = tr.split_at_mut(steps * g4);
            let (cells, hidden) = rest.split_at_mut((steps + 1) * u);
            let xs = &x[b * steps * c..(b + 1) * steps * c];
            let mut z = vec![0.0; g4];
            for t in 0..steps {
                z.copy_from_slice(bias);
                for (ci, &xv) in xs[t * c..(t + 1) * c].iter().enumerate() {
                    if xv != 0.0 {
                        for (zj, &wv) in z.iter_mut().zip(&w[ci * g4..(ci + 1) * g4]) {
                            *zj += xv * wv;
                        }
                    }
                }
                let h_prev = &hidden[t * u..(t + 1) * u];
                for (ui, &hv) in h_prev.iter().enumerate() {
                    for (zj, &rv) in z.iter_mut().zip(&r[ui * g4..(ui + 1) * g4]) {
                        *zj += hv * rv;
                    }
                }
                let gt = &mut gates[t * g4..(t + 1) * g4];
                for j in 0..u {
                    gt[j] = sigmoid(z[j]);
                    gt[u + j] = sigmoid(z[u + j]);
                    gt[2 * u + j] = z[2 * u + j].tanh();
                    gt[3 * u + j] = sigmoid(z[3 * u + j]);
                }
                for j in 0..u {
                    let c_new = gt[u + j] * cells[t * u + j] + gt[j] * gt[2 * u + j];
                    cells[(t + 1) * u + j] = c_new;
                    hidden[(t + 1) * u + j] = gt[3 * u + j] * c_new.tanh();
                }
            }
        });
        let mut out = Vec::with_capacity(batch * u);
        for tr in trace.chunks(per) {
            let h_last = per - u;
            out.extend_from_slice(&tr[h_last..]);
        }
        Ok((
            Tensor::from_vec(vec![batch, u], out)?,
            LstmCache {
                input: input.clone(),
                trace,
                steps,
            },
        ))
    }

    /// Backpropagation through time from the gradient of the final hidden state.
    pub fn backward(
        &mut self,
        cache: &LstmCache,
        grad_output: &Tensor,
        need_input_grad: bool,
    ) -> Result<Option<Tensor>, NnError> {
        let u = self.units;
        let g4 = 4 * u;
        let c = self.in_features;
        let steps = cache.steps;
        let batch = cache.input.batch();
        if grad_output.shape() != [batch, u] {
            return Err(NnError::ShapeMismatch(format!(
                "{}: gradient {:?} vs output ({batch}, {u})",
                self.name,
                grad_output.shape()
            )));
        }
        let per = self.trace_len(steps);
        let w = self.kernel.value.data();
        let r = self.recurrent.value.data();
        let x = cache.input.data();
        let gout = grad_output.data();
        let (wlen, rlen) = (c * g4, u * g4);
        let mut dx = if need_input_grad {
            vec![0.0; batch * steps * c]
        } else {
            Vec::new()
        };
        let grads = chunked_backward(
            batch,
            wlen + rlen + g4,
            need_input_grad.then_some((dx.as_mut_slice(), steps * c)),
            |samples, partial, dx_chunk| {
                let (dw, rest) = partial.split_at_mut(wlen);
                let (dr, db) = rest.split_at_mut(rlen);
                let first = samples.start;
                let mut dz = vec![0.0; g4];
                let mut dh_next = vec![0.0; u];
                for b in samples {
                    let tr = &cache.trace[b * per..(b + 1) * per];
                    let (gates, rest) = tr.split_at(steps * g4);
                    let (cells, hidden) = rest.split_at((steps + 1) * u);
                    let xs = &x[b * steps * c..(b + 1) * steps * c];
                    let mut dh = gout[b * u..(b + 1) * u].to_vec();
                    let mut dc = vec![0.0; u];
                    for t in (0..steps).rev() {
                        let gt = &gates[t * g4..(t + 1) * g4];
                        for j in 0..u {
                            let (ig, fg, cg, og) = (gt[j], gt[u + j], gt[2 * u + j], gt[3 * u + j]);
                            let tc = cells[(t + 1) * u + j].tanh();
                            let c_prev = cells[t * u + j];
                            dc[j] += dh[j] * og * (1.0 - tc * tc);
                            dz[j] = dc[j] * cg * ig * (1.0 - ig);
                            dz[u + j] = dc[j] * c_prev * fg * (1.0 - fg);
                            dz[2 * u + j] = dc[j] * ig * (1.0 - cg * cg);
                            dz[3 * u + j] = dh[j] * tc * og * (1.0 - og);
                            dc[j] *= fg;
                        }
                        for (g, d) in db.iter_mut().zip(&dz) {
                            *g += d;
                        }
                        let xt = &xs[t * c..(t + 1) * c];
                        for (ci, &xv) in xt.iter().enumerate() {
                            if xv != 0.0 {
                                for (g, d) in dw[ci * g4..(ci + 1) * g4].iter_mut().zip(&dz) {
                                    *g += xv * d;
                                }
                            }
                        }
                        let h_prev = &hidden[t * u..(t + 1) * u];
                        for (ui, &hv) in h_prev.iter().enumerate() {
                            if hv != 0.0 {
                                for (g, d) in dr[ui * g4..(ui + 1) * g4].iter_mut().zip(&dz) {
                                    *g += hv * d;
                                }
                            }
                        }
                        if !dx_chunk.is_empty() {
                            let base = (b - first) * steps * c + t * c;
                            for ci in 0..c {
                                dx_chunk[base + ci] = w[ci * g4..(ci + 1) * g4]
                                    .iter()
                                    .zip(&dz)
                                    .map(|(a, d)| a * d)
                                    .sum();
                            }
                        }
                        for (ui, v) in dh_next.iter_mut().enumerate() {
                            *v = r[ui * g4..(ui + 1) * g4]
                                .iter()
                                .zip(&dz)
                                .map(|(a, d)| a * d)
                                .sum();
                        }
                        dh.copy_from_slice(&dh_next);
                    }
                }
            },
        );
        add_into(self.kernel.grad.data_mut(), &grads[..wlen]);
        add_into(self.recurrent.grad.data_mut(), &grads[wlen..wlen + rlen]);
        add_into(self.bias.grad.data_mut(), &grads[wlen + rlen..]);
        if need_input_grad {
            Ok(Some(Tensor::from_vec(vec![batch, steps, c], dx)?))
        } else {
            Ok(None)
        }
    }
}
