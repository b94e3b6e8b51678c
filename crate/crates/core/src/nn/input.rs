use super::{NnError, Tensor};
use crate::seq_encoding::{EncodedProtein, ALPHABET_SIZE};

/// A batch of one-hot sequences of identical padded length, stored as the hot
/// column of each non-padding row.
///
/// `flat` marks a batch that has gone through a flatten layer: the logical
/// per-sample shape is then `(rows * width)` instead of `(rows, width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotBatch {
    rows: usize,
    width: usize,
    flat: bool,
    hots: Vec<Vec<u8>>,
}

impl OneHotBatch {
    pub fn new(rows: usize, width: usize, hots: Vec<Vec<u8>>) -> Result<Self, NnError> {
        for h in &hots {
            if h.len() > rows || h.iter().any(|&c| c as usize >= width) {
                return Err(NnError::ShapeMismatch(format!(
                    "one-hot sample does not fit ({rows}, {width})"
                )));
            }
        }
        Ok(Self {
            rows,
            width,
            flat: false,
            hots,
        })
    }

    pub fn from_encoded<'a, I>(proteins: I) -> Result<Self, NnError>
    where
        I: IntoIterator<Item = &'a EncodedProtein>,
    {
        let mut rows = None;
        let mut hots = Vec::new();
        for p in proteins {
            match rows {
                None => rows = Some(p.max_len()),
                Some(r) if r != p.max_len() => {
                    return Err(NnError::ShapeMismatch(format!(
                        "mixed padded lengths {r} and {}",
                        p.max_len()
                    )))
                }
                _ => {}
            }
            hots.push(p.indices().to_vec());
        }
        let rows = rows.ok_or_else(|| NnError::ShapeMismatch("empty batch".into()))?;
        Self::new(rows, ALPHABET_SIZE, hots)
    }

    pub fn batch(&self) -> usize {
        self.hots.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    pub fn hots(&self) -> &[Vec<u8>] {
        &self.hots
    }

    pub fn sample_shape(&self) -> Vec<usize> {
        if self.flat {
            vec![self.rows * self.width]
        } else {
            vec![self.rows, self.width]
        }
    }

    pub fn flattened(&self) -> Self {
        Self {
            flat: true,
            ..self.clone()
        }
    }

    pub fn to_dense(&self) -> Tensor {
        let per = self.rows * self.width;
        let mut data = vec![0.0; self.batch() * per];
        for (b, h) in self.hots.iter().enumerate() {
            for (r, &c) in h.iter().enumerate() {
                data[b * per + r * self.width + c as usize] = 1.0;
            }
        }
        let mut shape = vec![self.batch()];
        shape.extend(self.sample_shape());
        Tensor::from_vec(shape, data).expect("consistent shape")
    }
}

/// Input to a layer: a dense tensor, or one-hot sequences at a branch entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Activations {
    Dense(Tensor),
    OneHot(OneHotBatch),
}

impl Activations {
    pub fn batch(&self) -> usize {
        match self {
            Activations::Dense(t) => t.batch(),
            Activations::OneHot(o) => o.batch(),
        }
    }

    /// Shape without the batch dimension.
    pub fn sample_shape(&self) -> Vec<usize> {
        match self {
            Activations::Dense(t) => t.shape()[1..].to_vec(),
            Activations::OneHot(o) => o.sample_shape(),
        }
    }

    pub fn to_dense(&self) -> Tensor {
        match self {
            Activations::Dense(t) => t.clone(),
            Activations::OneHot(o) => o.to_dense(),
        }
    }

    pub fn as_dense(&self) -> Option<&Tensor> {
        match self {
            Activations::Dense(t) => Some(t),
            Activations::OneHot(_) => None,
        }
    }
}

impl From<Tensor> for Activations {
    fn from(t: Tensor) -> Self {
        Activations::Dense(t)
    }
}

impl From<OneHotBatch> for Activations {
    fn from(o: OneHotBatch) -> Self {
        Activations::OneHot(o)
    }
}
