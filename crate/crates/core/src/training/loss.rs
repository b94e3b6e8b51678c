use crate::nn::{NnError, Tensor};

pub const BCE_EPSILON: f64 = 1e-12;

fn check(predictions: &Tensor, labels: &Tensor) -> Result<(), NnError> {
    if predictions.shape() != labels.shape() || predictions.is_empty() {
        return Err(NnError::ShapeMismatch(format!(
            "predictions {:?} vs labels {:?}",
            predictions.shape(),
            labels.shape()
        )));
    }
    Ok(())
}

/// Per-sample `-[y ln p + (1 - y) ln(1 - p)]` with `p` clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn bce_per_sample(predictions: &Tensor, labels: &Tensor) -> Result<Vec<f64>, NnError> {
    check(predictions, labels)?;
    Ok(predictions
        .data()
        .iter()
        .zip(labels.data())
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .collect())
}

/// Mean binary cross-entropy and its gradient with respect to the predictions.
/// The gradient is zero where the clamp is active.
pub fn bce_loss(predictions: &Tensor, labels: &Tensor) -> Result<(f64, Tensor), NnError> {
    let losses = bce_per_sample(predictions, labels)?;
    let n = losses.len() as f64;
    let grad: Vec<f64> = predictions
        .data()
        .iter()
        .zip(labels.data())
        .map(|(&p, &y)| {
            if !(BCE_EPSILON..=1.0 - BCE_EPSILON).contains(&p) {
                0.0
            } else {
                (p - y) / (p * (1.0 - p)) / n
            }
        })
        .collect();
    Ok((
        losses.iter().sum::<f64>() / n,
        Tensor::from_vec(predictions.shape().to_vec(), grad)?,
    ))
}
