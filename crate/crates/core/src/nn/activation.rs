use serde::{Deserialize, Serialize};

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Elementwise activation.
pub fn activation_forward(input: &Tensor, kind: Activation) -> Tensor {
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|v| *v = kind.apply(*v));
    out
}

/// Gradient w.r.t. the activation input, given its output and the upstream gradient.
pub fn activation_backward(output: &Tensor, grad_output: &Tensor, kind: Activation) -> Tensor {
    let mut grad = grad_output.clone();
    for (g, &y) in grad.data_mut().iter_mut().zip(output.data()) {
        *g *= kind.derivative_from_output(y);
    }
    grad
}

/// Applies `kind` in place, used by layers with a fused activation.
pub(crate) fn apply_in_place(values: &mut [f64], kind: Activation) {
    if kind != Activation::Linear {
        values.iter_mut().for_each(|v| *v = kind.apply(*v));
    }
}

/// Multiplies `grad` by the activation derivative at `output`, in place.
pub(crate) fn backprop_in_place(grad: &mut [f64], output: &[f64], kind: Activation) {
    if kind != Activation::Linear {
        for (g, &y) in grad.iter_mut().zip(output) {
            *g *= kind.derivative_from_output(y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_clamps_negatives() {
        let x = Tensor::from_vec(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(activation_forward(&x, Activation::Relu).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn sigmoid_midpoint_and_tails() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn tanh_gradient_matches_central_difference() {
        let xs = [-2.3, -0.7, 0.0, 0.4, 1.9];
        let x = Tensor::from_vec(vec![5], xs.to_vec()).unwrap();
        let y = activation_forward(&x, Activation::Tanh);
        let ones = Tensor::filled(&[5], 1.0);
        let g = activation_backward(&y, &ones, Activation::Tanh);
        let h = 1e-5;
        for (i, &xi) in xs.iter().enumerate() {
            let fd = ((xi + h).tanh() - (xi - h).tanh()) / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-8, "at {xi}: {fd} vs {}", g.data()[i]);
        }
    }

    #[test]
    fn sigmoid_gradient_matches_central_difference() {
        for &xi in &[-3.0, -0.5, 0.0, 1.2] {
            let h = 1e-5;
            let fd = (sigmoid(xi + h) - sigmoid(xi - h)) / (2.0 * h);
            let an = Activation::Sigmoid.derivative_from_output(sigmoid(xi));
            assert!((fd - an).abs() < 1e-9);
        }
    }
}
