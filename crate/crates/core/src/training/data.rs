use crate::dataset::InteractionCorpus;
use crate::nn::{Activations, OneHotBatch, Tensor};
use crate::seq_encoding::{encode_protein, EncodingError, ALPHABET_SIZE};

/// A corpus encoded for one padded length, kept as hot indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    max_len: usize,
    a: Vec<Vec<u8>>,
    b: Vec<Vec<u8>>,
    labels: Vec<f64>,
    ids: Vec<(String, String)>,
}

impl EncodedDataset {
    pub fn from_corpus(corpus: &InteractionCorpus, max_len: usize) -> Result<Self, EncodingError> {
        let mut out = Self {
            max_len,
            a: Vec::with_capacity(corpus.len()),
            b: Vec::with_capacity(corpus.len()),
            labels: Vec::with_capacity(corpus.len()),
            ids: Vec::with_capacity(corpus.len()),
        };
        for p in &corpus.pairs {
            out.a.push(encode_protein(&p.a, max_len)?.indices().to_vec());
            out.b.push(encode_protein(&p.b, max_len)?.indices().to_vec());
            out.labels.push(if p.label { 1.0 } else { 0.0 });
            out.ids.push((p.a.id.clone(), p.b.id.clone()));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn ids(&self) -> &[(String, String)] {
        &self.ids
    }

    /// Concatenation, `self` first.
    pub fn merged(&self, other: &Self) -> Self {
        assert_eq!(self.max_len, other.max_len, "padded lengths differ");
        let mut out = self.clone();
        out.a.extend(other.a.iter().cloned());
        out.b.extend(other.b.iter().cloned());
        out.labels.extend_from_slice(&other.labels);
        out.ids.extend(other.ids.iter().cloned());
        out
    }

    /// Inputs for protein A, protein B and the `(n, 1)` labels of `rows`.
    pub fn batch(&self, rows: &[usize]) -> (Activations, Activations, Tensor) {
        let pick = |side: &[Vec<u8>]| {
            let hots = rows.iter().map(|&i| side[i].clone()).collect();
            Activations::OneHot(
                OneHotBatch::new(self.max_len, ALPHABET_SIZE, hots).expect("encoded rows fit"),
            )
        };
        let labels = Tensor::from_vec(vec![rows.len(), 1], rows.iter().map(|&i| self.labels[i]).collect())
            .expect("one label per row");
        (pick(&self.a), pick(&self.b), labels)
    }
}
