//! Amino-acid alphabet and fixed-shape one-hot encoding of protein sequences.
//!
//! Every protein becomes a `(max_len, 24)` one-hot matrix: one row per residue
//! and all-zero rows after the sequence end. The matrix is stored as one
//! symbol index per residue, since all but one entry of every row is zero;
//! [`EncodedProtein::to_dense`] materialises it when a dense grid is needed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::Tensor;

/// Default padded length of every encoded protein.
pub const MAX_LEN: usize = 1166;

/// Width of a one-hot row.
pub const ALPHABET_SIZE: usize = 24;

/// The 20 standard residues in alphabetical one-letter order, then
/// selenocysteine (U) and the ambiguity codes B, Z and X.
const SYMBOLS: [u8; ALPHABET_SIZE] = *b"ACDEFGHIKLMNPQRSTVWYUBZX";

const NO_INDEX: u8 = u8::MAX;

const LOOKUP: [u8; 256] = {
    let mut table = [NO_INDEX; 256];
    let mut i = 0;
    while i < ALPHABET_SIZE {
        table[SYMBOLS[i] as usize] = i as u8;
        i += 1;
    }
    table
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("unknown residue {residue:?} at position {position}")]
    UnknownResidue { residue: char, position: usize },
    #[error("sequence of length {len} exceeds maximum length {max_len}")]
    SequenceTooLong { len: usize, max_len: usize },
    #[error("empty sequence")]
    EmptySequence,
}

/// The fixed 24-symbol residue alphabet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AminoAlphabet;

impl AminoAlphabet {
    pub fn symbols(&self) -> &'static [u8; ALPHABET_SIZE] {
        &SYMBOLS
    }

    pub fn len(&self) -> usize {
        ALPHABET_SIZE
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of `residue` in the alphabet. Lowercase letters are accepted.
    pub fn index(&self, residue: char) -> Option<usize> {
        if !residue.is_ascii() {
            return None;
        }
        let idx = LOOKUP[residue.to_ascii_uppercase() as usize];
        (idx != NO_INDEX).then_some(idx as usize)
    }

    pub fn symbol(&self, index: usize) -> Option<char> {
        SYMBOLS.get(index).map(|&b| b as char)
    }
}

/// Index of `residue` in the canonical alphabet.
pub fn alphabet_index(residue: char) -> Result<usize, EncodingError> {
    AminoAlphabet
        .index(residue)
        .ok_or(EncodingError::UnknownResidue { residue, position: 0 })
}

/// A protein identifier and its residue chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProteinRecord {
    pub id: String,
    pub sequence: String,
}

impl ProteinRecord {
    /// Builds a record, uppercasing the sequence and rejecting empty chains or
    /// characters outside the alphabet. Length is not checked here.
    pub fn new(id: impl Into<String>, sequence: &str) -> Result<Self, EncodingError> {
        let sequence = sequence.to_ascii_uppercase();
        check_residues(&sequence)?;
        Ok(Self {
            id: id.into(),
            sequence,
        })
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

fn check_residues(sequence: &str) -> Result<(), EncodingError> {
    if sequence.is_empty() {
        return Err(EncodingError::EmptySequence);
    }
    for (position, residue) in sequence.chars().enumerate() {
        if AminoAlphabet.index(residue).is_none() {
            return Err(EncodingError::UnknownResidue { residue, position });
        }
    }
    Ok(())
}

/// Full validation: alphabet, non-empty, and length cutoff.
pub fn validate_sequence(sequence: &str, max_len: usize) -> Result<(), EncodingError> {
    check_residues(sequence)?;
    let len = sequence.chars().count();
    if len > max_len {
        return Err(EncodingError::SequenceTooLong { len, max_len });
    }
    Ok(())
}

/// One-hot representation of a protein padded to `max_len` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedProtein {
    max_len: usize,
    indices: Vec<u8>,
}

impl EncodedProtein {
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn true_length(&self) -> usize {
        self.indices.len()
    }

    /// Hot column of each non-padding row.
    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.max_len, ALPHABET_SIZE)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        match self.indices.get(row) {
            Some(&idx) if idx as usize == col => 1.0,
            _ => 0.0,
        }
    }

    pub fn to_dense(&self) -> Tensor {
        let mut data = vec![0.0; self.max_len * ALPHABET_SIZE];
        for (row, &idx) in self.indices.iter().enumerate() {
            data[row * ALPHABET_SIZE + idx as usize] = 1.0;
        }
        Tensor::from_vec(vec![self.max_len, ALPHABET_SIZE], data)
            .expect("shape matches data length")
    }

    /// Reads the hot symbol of every non-zero row back into a sequence.
    pub fn decode(&self) -> String {
        self.indices.iter().map(|&i| SYMBOLS[i as usize] as char).collect()
    }
}

pub fn encode_protein(
    record: &ProteinRecord,
    max_len: usize,
) -> Result<EncodedProtein, EncodingError> {
    encode_sequence(&record.sequence, max_len)
}

pub fn encode_sequence(sequence: &str, max_len: usize) -> Result<EncodedProtein, EncodingError> {
    let len = sequence.chars().count();
    if len > max_len {
        return Err(EncodingError::SequenceTooLong { len, max_len });
    }
    let indices = sequence
        .chars()
        .enumerate()
        .map(|(position, residue)| {
            AminoAlphabet
                .index(residue)
                .map(|i| i as u8)
                .ok_or(EncodingError::UnknownResidue { residue, position })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EncodedProtein { max_len, indices })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvalidRecord {
    pub id: String,
    pub reason: String,
    #[serde(skip)]
    pub error: EncodingError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: usize,
    pub invalid: Vec<InvalidRecord>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.invalid.is_empty()
    }
}

/// Checks raw `(id, sequence)` records against the alphabet and the default
/// length cutoff. Case is normalised before checking.
pub fn validate_corpus<'a, I>(records: I) -> ValidationReport
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut report = ValidationReport::default();
    for (id, sequence) in records {
        match validate_sequence(&sequence.to_ascii_uppercase(), MAX_LEN) {
            Ok(()) => report.valid += 1,
            Err(error) => report.invalid.push(InvalidRecord {
                id: id.to_string(),
                reason: error.to_string(),
                error,
            }),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alphabet_is_a_bijection() {
        let alphabet = AminoAlphabet;
        let mut seen = [false; ALPHABET_SIZE];
        for (i, &sym) in alphabet.symbols().iter().enumerate() {
            assert_eq!(alphabet.index(sym as char), Some(i));
            assert!(!seen[i]);
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn index_examples() {
        assert_eq!(alphabet_index('A'), Ok(0));
        assert_eq!(alphabet_index('X'), Ok(23));
        assert_eq!(alphabet_index('a'), Ok(0));
        assert!(matches!(
            alphabet_index('J'),
            Err(EncodingError::UnknownResidue { residue: 'J', .. })
        ));
        assert!(alphabet_index('é').is_err());
    }

    #[test]
    fn single_residue_is_padded() {
        let record = ProteinRecord::new("p", "A").unwrap();
        let enc = encode_protein(&record, 4).unwrap();
        assert_eq!(enc.true_length(), 1);
        let dense = enc.to_dense();
        assert_eq!(dense.shape(), &[4, 24]);
        assert_eq!(dense.data()[0], 1.0);
        assert_eq!(dense.data().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn length_cutoff() {
        let long = "A".repeat(MAX_LEN + 1);
        assert_eq!(
            encode_sequence(&long, MAX_LEN),
            Err(EncodingError::SequenceTooLong {
                len: 1167,
                max_len: 1166
            })
        );
        let full = "W".repeat(MAX_LEN);
        let enc = encode_sequence(&full, MAX_LEN).unwrap();
        let dense = enc.to_dense();
        for row in dense.data().chunks(ALPHABET_SIZE) {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn lowercase_is_normalised() {
        let record = ProteinRecord::new("p", "acdx").unwrap();
        assert_eq!(record.sequence, "ACDX");
    }

    #[test]
    fn empty_record_rejected() {
        assert_eq!(ProteinRecord::new("p", ""), Err(EncodingError::EmptySequence));
    }

    #[test]
    fn corpus_validation() {
        let report = validate_corpus([("p1", "ACD")]);
        assert_eq!(report.valid, 1);
        assert!(report.is_clean());

        let report = validate_corpus([("p1", "AC1")]);
        assert_eq!(report.valid, 0);
        assert_eq!(
            report.invalid[0].error,
            EncodingError::UnknownResidue {
                residue: '1',
                position: 2
            }
        );

        let long = "A".repeat(2000);
        let report = validate_corpus([("p1", long.as_str())]);
        assert_eq!(report.valid, 0);
        assert!(matches!(
            report.invalid[0].error,
            EncodingError::SequenceTooLong { len: 2000, .. }
        ));

        let report = validate_corpus([("p1", "")]);
        assert_eq!(report.invalid[0].error, EncodingError::EmptySequence);
    }

    proptest! {
        #[test]
        fn encoding_sums_to_length_and_round_trips(
            seq in proptest::collection::vec(0usize..ALPHABET_SIZE, 1..200),
            extra in 0usize..50,
        ) {
            let s: String = seq.iter().map(|&i| SYMBOLS[i] as char).collect();
            let max_len = s.len() + extra;
            let enc = encode_sequence(&s, max_len).unwrap();
            let dense = enc.to_dense();
            prop_assert_eq!(dense.data().iter().sum::<f64>(), s.len() as f64);
            for (row, chunk) in dense.data().chunks(ALPHABET_SIZE).enumerate() {
                let ones = chunk.iter().filter(|&&v| v == 1.0).count();
                prop_assert_eq!(ones, usize::from(row < s.len()));
            }
            prop_assert_eq!(enc.decode(), s.clone());
            prop_assert_eq!(encode_sequence(&s, max_len).unwrap(), enc);
        }
    }
}
