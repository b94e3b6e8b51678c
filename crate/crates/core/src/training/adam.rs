use crate::nn::{NnError, Parameter};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Adam with bias correction. Moment buffers are created on the first step
/// and matched to parameters by position; non-trainable parameters are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Default for Adam {
    fn default() -> Self {
        Self::new()
    }
}

impl Adam {
    pub fn new() -> Self {
        Self {
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            epsilon: ADAM_EPSILON,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut Parameter], lr: f64) -> Result<(), NnError> {
        let trainable: Vec<&mut &mut Parameter> = params.iter_mut().filter(|p| p.trainable).collect();
        if self.moments.is_empty() {
            self.moments = trainable
                .iter()
                .map(|p| (vec![0.0; p.len()], vec![0.0; p.len()]))
                .collect();
        }
        if self.moments.len() != trainable.len()
            || self.moments.iter().zip(&trainable).any(|(m, p)| m.0.len() != p.len())
        {
            return Err(NnError::ShapeMismatch(
                "optimizer state does not match the parameter set".into(),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (p, (m, v)) in trainable.into_iter().zip(self.moments.iter_mut()) {
            let Parameter { value, grad, .. } = &mut **p;
            for (((w, &g), m), v) in value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn scalar(v: f64, g: f64) -> Parameter {
        let mut p = Parameter::new("w", Tensor::filled(&[1], v), true);
        p.grad = Tensor::filled(&[1], g);
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = scalar(0.3, 0.0);
        Adam::new().step(&mut [&mut p], 0.001).unwrap();
        assert_eq!(p.value.data()[0], 0.3);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar(0.0, 1.0);
        Adam::new().step(&mut [&mut p], 0.001).unwrap();
        // m_hat = 1, v_hat = 1.
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p.value.data()[0] - expected).abs() < 1e-18);
    }

    #[test]
    fn second_step_matches_hand_computation() {
        let mut p = scalar(0.0, 1.0);
        let mut opt = Adam::new();
        opt.step(&mut [&mut p], 0.01).unwrap();
        p.grad = Tensor::filled(&[1], -2.0);
        opt.step(&mut [&mut p], 0.01).unwrap();
        let m: f64 = 0.9 * 0.1 + 0.1 * -2.0;
        let v: f64 = 0.999 * 0.001 + 0.001 * 4.0;
        let m_hat = m / (1.0 - 0.81);
        let v_hat = v / (1.0 - 0.999f64.powi(2));
        let expected = -0.01 / (1.0 + 1e-8) - 0.01 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p.value.data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn frozen_parameters_untouched() {
        let mut p = scalar(1.0, 5.0);
        p.trainable = false;
        let mut q = scalar(1.0, 5.0);
        Adam::new().step(&mut [&mut p, &mut q], 0.1).unwrap();
        assert_eq!(p.value.data()[0], 1.0);
        assert!(q.value.data()[0] < 1.0);
    }

    #[test]
    fn mismatched_state_rejected() {
        let mut p = scalar(1.0, 1.0);
        let mut opt = Adam::new();
        opt.step(&mut [&mut p], 0.1).unwrap();
        let mut q = Parameter::new("q", Tensor::zeros(&[3]), true);
        assert!(opt.step(&mut [&mut q], 0.1).is_err());
    }
}
