use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use super::Tensor;
use crate::rng::seeded;

pub fn xavier_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Fills `shape` with draws from `U(-limit, limit)`, `limit = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform_with<R: Rng>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor {
    let limit = xavier_limit(fan_in, fan_out);
    let dist = Uniform::new_inclusive(-limit, limit);
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = dist.sample(rng);
    }
    t
}

/// A `(fan_in, fan_out)` Xavier-uniform matrix from its own seeded generator.
pub fn xavier_uniform_init(fan_in: usize, fan_out: usize, seed: u64) -> Tensor {
    let mut rng = seeded(seed);
    xavier_uniform_with(&[fan_in, fan_out], fan_in, fan_out, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_for_equal_fans() {
        assert_eq!(xavier_limit(3, 3), 1.0);
    }

    #[test]
    fn samples_stay_in_bounds() {
        let t = xavier_uniform_init(40, 60, 7);
        let limit = xavier_limit(40, 60);
        assert!(t.data().iter().all(|v| v.abs() <= limit));
        assert_eq!(t.shape(), &[40, 60]);
    }

    #[test]
    fn mean_is_centered() {
        // 100,000 draws; standard error of the mean is limit/sqrt(3e5) ≈ 0.0018·limit.
        let t = xavier_uniform_init(250, 400, 2024);
        let limit = xavier_limit(250, 400);
        let mean = t.data().iter().sum::<f64>() / t.len() as f64;
        assert_eq!(t.len(), 100_000);
        assert!(mean.abs() < 0.01 * limit, "mean {mean}");
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(xavier_uniform_init(5, 4, 1), xavier_uniform_init(5, 4, 1));
        assert_ne!(xavier_uniform_init(5, 4, 1), xavier_uniform_init(5, 4, 2));
    }
}
