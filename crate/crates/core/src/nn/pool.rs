use super::parallel::per_sample;
use super::{NnError, Tensor};

/// Non-overlapping max pooling along the length axis of `(batch, length, channels)`.
///
/// Trailing positions that do not fill a whole window are dropped. Ties go to
/// the lowest index, which is also where the backward pass routes the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPool1d {
    pub name: String,
    pub pool_size: usize,
}

#[derive(Debug, Clone)]
pub struct PoolCache {
    input_shape: Vec<usize>,
    /// Flat per-sample input offset of every output element's maximum.
    argmax: Vec<u32>,
}

impl MaxPool1d {
    pub fn new(name: &str, pool_size: usize) -> Result<Self, NnError> {
        if pool_size == 0 {
            return Err(NnError::InvalidHyperParameter(format!(
                "{name}: pool size must be at least 1"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            pool_size,
        })
    }

    pub fn output_len(&self, len: usize) -> Result<usize, NnError> {
        if len < self.pool_size {
            return Err(NnError::InputTooShort {
                len,
                needed: self.pool_size,
            });
        }
        Ok(len / self.pool_size)
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, PoolCache), NnError> {
        let shape = input.shape();
        if shape.len() != 3 {
            return Err(NnError::ShapeMismatch(format!(
                "{}: expected (batch, length, channels), got {shape:?}",
                self.name
            )));
        }
        let (batch, len, c) = (shape[0], shape[1], shape[2]);
        let out_len = self.output_len(len)?;
        let p = self.pool_size;
        let x = input.data();
        let per_out = out_len * c;
        // Interleave value and argmax per output element so one parallel pass fills both.
        let mut packed = vec![0.0; batch * per_out * 2];
        per_sample(&mut packed, per_out * 2, |b, o| {
            let xs = &x[b * len * c..(b + 1) * len * c];
            for t in 0..out_len {
                for ch in 0..c {
                    let mut best = t * p * c + ch;
                    for i in 1..p {
                        let idx = (t * p + i) * c + ch;
                        if xs[idx] > xs[best] {
                            best = idx;
                        }
                    }
                    let slot = (t * c + ch) * 2;
                    o[slot] = xs[best];
                    o[slot + 1] = best as f64;
                }
            }
        });
        let mut out = Vec::with_capacity(batch * per_out);
        let mut argmax = Vec::with_capacity(batch * per_out);
        for pair in packed.chunks(2) {
            out.push(pair[0]);
            argmax.push(pair[1] as u32);
        }
        Ok((
            Tensor::from_vec(vec![batch, out_len, c], out)?,
            PoolCache {
                input_shape: shape.to_vec(),
                argmax,
            },
        ))
    }

    pub fn backward(&self, cache: &PoolCache, grad_output: &Tensor) -> Result<Tensor, NnError> {
        let (batch, len, c) = (
            cache.input_shape[0],
            cache.input_shape[1],
            cache.input_shape[2],
        );
        if grad_output.len() != cache.argmax.len() {
            return Err(NnError::ShapeMismatch(format!(
                "{}: gradient has {} values, expected {}",
                self.name,
                grad_output.len(),
                cache.argmax.len()
            )));
        }
        let per_in = len * c;
        let per_out = cache.argmax.len() / batch.max(1);
        let g = grad_output.data();
        let mut dx = vec![0.0; batch * per_in];
        per_sample(&mut dx, per_in, |b, row| {
            for i in 0..per_out {
                row[cache.argmax[b * per_out + i] as usize] += g[b * per_out + i];
            }
        });
        Tensor::from_vec(cache.input_shape.clone(), dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Tensor {
        Tensor::from_vec(vec![1, values.len(), 1], values.to_vec()).unwrap()
    }

    #[test]
    fn window_maxima() {
        let pool = MaxPool1d::new("p", 3).unwrap();
        let (y, _) = pool.forward(&column(&[1.0, 3.0, 2.0, 5.0, 4.0, 6.0])).unwrap();
        assert_eq!(y.data(), &[3.0, 6.0]);
    }

    #[test]
    fn remainder_dropped() {
        let pool = MaxPool1d::new("p", 3).unwrap();
        assert_eq!(pool.output_len(1147).unwrap(), 382);
        let (y, _) = pool.forward(&column(&[1.0, 2.0, 3.0, 9.0])).unwrap();
        assert_eq!(y.data(), &[3.0]);
    }

    #[test]
    fn constant_input_routes_to_first_position() {
        let pool = MaxPool1d::new("p", 3).unwrap();
        let x = column(&[2.0; 6]);
        let (y, cache) = pool.forward(&x).unwrap();
        assert_eq!(y.data(), &[2.0, 2.0]);
        let g = pool
            .backward(&cache, &Tensor::from_vec(vec![1, 2, 1], vec![1.5, -0.5]).unwrap())
            .unwrap();
        assert_eq!(g.data(), &[1.5, 0.0, 0.0, -0.5, 0.0, 0.0]);
    }

    #[test]
    fn invalid_sizes() {
        assert!(MaxPool1d::new("p", 0).is_err());
        let pool = MaxPool1d::new("p", 4).unwrap();
        assert!(matches!(
            pool.forward(&column(&[1.0, 2.0])),
            Err(NnError::InputTooShort { len: 2, needed: 4 })
        ));
    }
}
