//! Interaction-pair corpora and the regular / strict split builders.
//!
//! A *couple* is the unordered pair of protein ids together with its label:
//! `(A, B, l)` and `(B, A, l)` are the same couple. Overlap checks, split
//! assignment and mirror augmentation all work on couples, so the two
//! orientations of a couple always land in the same set.

mod audit;
mod augment;
mod ingest;
mod negatives;
mod split;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seq_encoding::ProteinRecord;

pub use audit::{audit_split, LeakReport, SetPairCounts};
pub use augment::{augment_mirrors, is_mirror_closed};
pub use ingest::{
    filter_by_length, ingest_pairs, read_pairs_file, read_proteins, read_proteins_file,
    write_pairs, write_pairs_file, IngestReport, RejectReason, Rejection,
};
pub use negatives::{candidate_count, sample_negatives};
pub use split::{
    balance_corpus, protein_occurrences, split_regular, split_strict, SplitRatios,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("corpus is not balanced: {positives} positives vs {negatives} negatives")]
    ImbalancedCorpus { positives: usize, negatives: usize },
    #[error("no couple contains a protein appearing at most twice")]
    EmptyStrictTest,
    #[error("split is already mirror-augmented")]
    AlreadyAugmented,
    #[error("requested {requested} negatives but only {available} non-interacting couples exist")]
    InsufficientCandidates { requested: usize, available: u128 },
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionPair {
    pub a: ProteinRecord,
    pub b: ProteinRecord,
    pub label: bool,
}

impl InteractionPair {
    pub fn new(a: ProteinRecord, b: ProteinRecord, label: bool) -> Self {
        Self { a, b, label }
    }

    pub fn couple(&self) -> CoupleKey {
        CoupleKey::new(&self.a.id, &self.b.id, self.label)
    }

    pub fn is_self_pair(&self) -> bool {
        self.a.id == self.b.id
    }

    pub fn mirrored(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
            label: self.label,
        }
    }

    /// Ordered identity `(a.id, b.id, label)` used for duplicate detection.
    pub fn triple(&self) -> (&str, &str, bool) {
        (&self.a.id, &self.b.id, self.label)
    }
}

/// Unordered protein-id pair plus label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoupleKey {
    pub low: String,
    pub high: String,
    pub label: bool,
}

impl CoupleKey {
    pub fn new(a: &str, b: &str, label: bool) -> Self {
        let (low, high) = if a <= b { (a, b) } else { (b, a) };
        Self {
            low: low.to_string(),
            high: high.to_string(),
            label,
        }
    }
}

impl fmt::Display for CoupleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.low, self.high, u8::from(self.label))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionCorpus {
    pub pairs: Vec<InteractionPair>,
    pub provenance: String,
}

impl InteractionCorpus {
    pub fn new(pairs: Vec<InteractionPair>, provenance: impl Into<String>) -> Self {
        Self {
            pairs,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.label).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn is_balanced(&self) -> bool {
        self.positives() == self.negatives()
    }

    /// Positive fraction, undefined for an empty corpus.
    pub fn balance(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.positives() as f64 / self.len() as f64)
    }

    pub fn couples(&self) -> BTreeSet<CoupleKey> {
        self.pairs.iter().map(InteractionPair::couple).collect()
    }

    pub fn protein_ids(&self) -> BTreeSet<&str> {
        self.pairs
            .iter()
            .flat_map(|p| [p.a.id.as_str(), p.b.id.as_str()])
            .collect()
    }

    /// Distinct proteins, first occurrence of each id kept, sorted by id.
    pub fn proteins(&self) -> Vec<ProteinRecord> {
        let mut seen = std::collections::BTreeMap::new();
        for p in &self.pairs {
            for r in [&p.a, &p.b] {
                seen.entry(r.id.clone()).or_insert_with(|| r.clone());
            }
        }
        seen.into_values().collect()
    }

    pub fn extend(&mut self, other: InteractionCorpus) {
        self.pairs.extend(other.pairs);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Regular,
    Strict,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Regular => "regular",
            SplitKind::Strict => "strict",
        })
    }
}

impl std::str::FromStr for SplitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regular" => Ok(SplitKind::Regular),
            "strict" => Ok(SplitKind::Strict),
            other => Err(format!("unknown split mode {other:?} (expected regular or strict)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetName {
    Train,
    Validation,
    Test,
}

impl SetName {
    pub const ALL: [SetName; 3] = [SetName::Train, SetName::Validation, SetName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SetName::Train => "train",
            SetName::Validation => "validation",
            SetName::Test => "test",
        }
    }
}

impl fmt::Display for SetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    /// Removed from the larger class to restore an exact 50/50 set.
    Rebalance,
    /// Strict-test candidate not selected for the test set; keeping it would
    /// put a rare protein into training or validation.
    UnselectedStrictCandidate,
}

/// A pair the builder dropped, with the set it was headed for, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discard {
    pub pair: InteractionPair,
    pub set: Option<SetName>,
    pub reason: DiscardReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: InteractionCorpus,
    pub validation: InteractionCorpus,
    pub test: InteractionCorpus,
    pub kind: SplitKind,
    pub augmented: bool,
    pub discarded: Vec<Discard>,
}

impl DatasetSplit {
    pub fn set(&self, name: SetName) -> &InteractionCorpus {
        match name {
            SetName::Train => &self.train,
            SetName::Validation => &self.validation,
            SetName::Test => &self.test,
        }
    }

    pub fn set_mut(&mut self, name: SetName) -> &mut InteractionCorpus {
        match name {
            SetName::Train => &mut self.train,
            SetName::Validation => &mut self.validation,
            SetName::Test => &mut self.test,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }

    pub fn total(&self) -> usize {
        self.sizes().iter().sum()
    }

    /// Training and validation sets merged, training first.
    pub fn train_plus_validation(&self) -> InteractionCorpus {
        let mut merged = self.train.clone();
        merged.extend(self.validation.clone());
        merged.provenance = format!("{} + validation", self.train.provenance);
        merged
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn couple_key_is_unordered() {
        assert_eq!(pair("P", "Q", true).couple(), pair("Q", "P", true).couple());
        assert_ne!(pair("P", "Q", true).couple(), pair("P", "Q", false).couple());
    }

    #[test]
    fn balance_of_empty_corpus_is_undefined() {
        assert_eq!(InteractionCorpus::default().balance(), None);
        let c = corpus(&[("A", "B", true), ("A", "C", false)]);
        assert_eq!(c.balance(), Some(0.5));
    }
}
