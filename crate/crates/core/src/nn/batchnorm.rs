//! Batch normalization over the last axis.
//!
//! Statistics are taken over every axis except the feature axis, so a
//! `(batch, features)` input normalises per feature across the batch and a
//! `(batch, length, channels)` input normalises per channel across batch and
//! length. Training mode uses batch statistics and folds them into the moving
//! averages; inference mode uses the moving averages only.

use super::{Mode, NnError, Parameter, Tensor};

pub const BN_EPSILON: f64 = 1e-3;
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub name: String,
    pub features: usize,
    pub epsilon: f64,
    pub momentum: f64,
    pub gamma: Parameter,
    pub beta: Parameter,
    pub moving_mean: Parameter,
    pub moving_var: Parameter,
    /// Set once a training-mode pass has updated the moving statistics.
    pub stats_ready: bool,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    mode: Mode,
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    shape: Vec<usize>,
}

impl BatchNorm {
    pub fn new(name: &str, features: usize) -> Self {
        Self {
            name: name.to_string(),
            features,
            epsilon: BN_EPSILON,
            momentum: BN_MOMENTUM,
            gamma: Parameter::new(format!("{name}/gamma"), Tensor::filled(&[features], 1.0), true),
            beta: Parameter::new(format!("{name}/beta"), Tensor::zeros(&[features]), true),
            moving_mean: Parameter::new(
                format!("{name}/moving_mean"),
                Tensor::zeros(&[features]),
                false,
            ),
            moving_var: Parameter::new(
                format!("{name}/moving_variance"),
                Tensor::filled(&[features], 1.0),
                false,
            ),
            stats_ready: false,
        }
    }

    /// Gamma, beta and both moving statistics.
    pub fn param_count(&self) -> usize {
        4 * self.features
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode) -> Result<(Tensor, BatchNormCache), NnError> {
        let f = self.features;
        let shape = input.shape();
        if shape.len() < 2 || *shape.last().unwrap() != f {
            return Err(NnError::ShapeMismatch(format!(
                "{}: expected trailing axis {f}, got {shape:?}",
                self.name
            )));
        }
        let x = input.data();
        let n = x.len() / f;
        let (mean, var) = match mode {
            Mode::Train => {
                if n == 0 {
                    return Err(NnError::ShapeMismatch(format!("{}: empty batch", self.name)));
                }
                let mut mean = vec![0.0; f];
                for row in x.chunks(f) {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                let mut var = vec![0.0; f];
                for row in x.chunks(f) {
                    for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|s| *s /= n as f64);

                let mom = self.momentum;
                for (mm, m) in self.moving_mean.value.data_mut().iter_mut().zip(&mean) {
                    *mm = mom * *mm + (1.0 - mom) * m;
                }
                for (mv, v) in self.moving_var.value.data_mut().iter_mut().zip(&var) {
                    *mv = mom * *mv + (1.0 - mom) * v;
                }
                self.stats_ready = true;
                (mean, var)
            }
            Mode::Infer => {
                if !self.stats_ready {
                    return Err(NnError::InferBeforeTrain(self.name.clone()));
                }
                (
                    self.moving_mean.value.data().to_vec(),
                    self.moving_var.value.data().to_vec(),
                )
            }
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let mut normalized = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        for ((row, nrow), orow) in x
            .chunks(f)
            .zip(normalized.chunks_mut(f))
            .zip(out.chunks_mut(f))
        {
            for j in 0..f {
                let xh = (row[j] - mean[j]) * inv_std[j];
                nrow[j] = xh;
                orow[j] = gamma[j] * xh + beta[j];
            }
        }
        Ok((
            Tensor::from_vec(shape.to_vec(), out)?,
            BatchNormCache {
                mode,
                normalized,
                inv_std,
                shape: shape.to_vec(),
            },
        ))
    }

    pub fn backward(&mut self, cache: &BatchNormCache, grad_output: &Tensor) -> Result<Tensor, NnError> {
        if grad_output.shape() != cache.shape.as_slice() {
            return Err(NnError::ShapeMismatch(format!(
                "{}: gradient {:?} vs input {:?}",
                self.name,
                grad_output.shape(),
                cache.shape
            )));
        }
        let f = self.features;
        let dy = grad_output.data();
        let n = dy.len() / f;
        let mut sum_dy = vec![0.0; f];
        let mut sum_dy_xh = vec![0.0; f];
        for (drow, nrow) in dy.chunks(f).zip(cache.normalized.chunks(f)) {
            for j in 0..f {
                sum_dy[j] += drow[j];
                sum_dy_xh[j] += drow[j] * nrow[j];
            }
        }
        for (g, s) in self.gamma.grad.data_mut().iter_mut().zip(&sum_dy_xh) {
            *g += s;
        }
        for (g, s) in self.beta.grad.data_mut().iter_mut().zip(&sum_dy) {
            *g += s;
        }
        let gamma = self.gamma.value.data();
        let mut dx = vec![0.0; dy.len()];
        match cache.mode {
            Mode::Train => {
                let nf = n as f64;
                for ((drow, nrow), xrow) in dy
                    .chunks(f)
                    .zip(cache.normalized.chunks(f))
                    .zip(dx.chunks_mut(f))
                {
                    for j in 0..f {
                        xrow[j] = gamma[j] * cache.inv_std[j] / nf
                            * (nf * drow[j] - sum_dy[j] - nrow[j] * sum_dy_xh[j]);
                    }
                }
            }
            Mode::Infer => {
                for (drow, xrow) in dy.chunks(f).zip(dx.chunks_mut(f)) {
                    for j in 0..f {
                        xrow[j] = gamma[j] * cache.inv_std[j] * drow[j];
                    }
                }
            }
        }
        Tensor::from_vec(cache.shape.clone(), dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts_include_moving_statistics() {
        assert_eq!(BatchNorm::new("bn", 20).param_count(), 80);
        assert_eq!(BatchNorm::new("bn", 5).param_count(), 20);
        assert_eq!(BatchNorm::new("bn", 25).param_count(), 100);
    }

    #[test]
    fn constant_batch_normalises_to_zero() {
        let mut bn = BatchNorm::new("bn", 3);
        let x = Tensor::filled(&[4, 3], 2.5);
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn infer_requires_training_pass() {
        let mut bn = BatchNorm::new("bn", 2);
        let x = Tensor::from_vec(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            bn.forward(&x, Mode::Infer).unwrap_err(),
            NnError::InferBeforeTrain("bn".into())
        );
        bn.forward(&x, Mode::Train).unwrap();
        let (a, _) = bn.forward(&x, Mode::Infer).unwrap();
        let (b, _) = bn.forward(&x, Mode::Infer).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn moving_statistics_follow_momentum() {
        let mut bn = BatchNorm::new("bn", 1);
        let x = Tensor::from_vec(vec![2, 1], vec![1.0, 3.0]).unwrap();
        bn.forward(&x, Mode::Train).unwrap();
        // mean 2, biased variance 1
        assert!((bn.moving_mean.value.data()[0] - 0.02).abs() < 1e-15);
        assert!((bn.moving_var.value.data()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sequence_input_normalises_per_channel() {
        let mut bn = BatchNorm::new("bn", 2);
        let x = Tensor::from_vec(vec![1, 3, 2], vec![0.0, 10.0, 1.0, 20.0, 2.0, 30.0]).unwrap();
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        let ch0: Vec<f64> = y.data().iter().step_by(2).copied().collect();
        let ch1: Vec<f64> = y.data().iter().skip(1).step_by(2).copied().collect();
        assert!((ch0.iter().sum::<f64>()).abs() < 1e-12);
        assert!((ch1.iter().sum::<f64>()).abs() < 1e-12);
        assert!(ch0[2] > 0.0 && ch1[0] < 0.0);
    }

    #[test]
    fn wrong_feature_axis() {
        let mut bn = BatchNorm::new("bn", 4);
        assert!(matches!(
            bn.forward(&Tensor::zeros(&[2, 3]), Mode::Train),
            Err(NnError::ShapeMismatch(_))
        ));
    }
}
