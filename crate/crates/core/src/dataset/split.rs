use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    CoupleKey, DatasetError, DatasetSplit, Discard, DiscardReason, InteractionCorpus,
    InteractionPair, SetName, SplitKind,
};
use crate::rng::{derive_seed, shuffle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self, DatasetError> {
        let r = Self {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(DatasetError::InvalidRatios(format!("{parts:?} has a negative or non-finite entry")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidRatios(format!("{parts:?} does not sum to 1")));
        }
        Ok(())
    }
}

/// `floor(n * fraction)`, tolerant of representation error just below an integer.
fn share(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction + 1e-9).floor() as usize
}

// Seed streams of the builders.
const STREAM_POSITIVE: u64 = 1;
const STREAM_NEGATIVE: u64 = 2;
const STREAM_TEST_POSITIVE: u64 = 3;
const STREAM_TEST_NEGATIVE: u64 = 4;
const STREAM_SET_ORDER: u64 = 10;

type Unit = Vec<InteractionPair>;

/// Pairs grouped by couple, groups in order of first appearance.
fn units(pairs: impl IntoIterator<Item = InteractionPair>) -> Vec<Unit> {
    let mut index = HashMap::<CoupleKey, usize>::new();
    let mut out: Vec<Unit> = Vec::new();
    for p in pairs {
        let slot = *index.entry(p.couple()).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[slot].push(p);
    }
    out
}

fn class_units(pairs: &[InteractionPair], label: bool, seed: u64) -> Vec<Unit> {
    let mut u = units(pairs.iter().filter(|p| p.label == label).cloned());
    shuffle(&mut u, seed);
    u
}

fn size(units: &[Unit]) -> usize {
    units.iter().map(Vec::len).sum()
}

/// Fills buckets in order up to their targets, whole units only; the last
/// bucket takes the rest.
fn fill(units: Vec<Unit>, targets: &[usize]) -> Vec<Vec<InteractionPair>> {
    let mut buckets: Vec<Vec<InteractionPair>> = vec![Vec::new(); targets.len() + 1];
    for unit in units {
        let slot = targets
            .iter()
            .enumerate()
            .position(|(i, &t)| buckets[i].len() + unit.len() <= t)
            .unwrap_or(targets.len());
        buckets[slot].extend(unit);
    }
    buckets
}

/// Joins the two class lists of a set, trimming the larger to the smaller.
fn join_balanced(
    mut pos: Vec<InteractionPair>,
    mut neg: Vec<InteractionPair>,
    set: SetName,
    seed: u64,
    provenance: &str,
    discarded: &mut Vec<Discard>,
) -> InteractionCorpus {
    let keep = pos.len().min(neg.len());
    for extra in pos.drain(keep..).chain(neg.drain(keep..)) {
        discarded.push(Discard {
            pair: extra,
            set: Some(set),
            reason: DiscardReason::Rebalance,
        });
    }
    pos.extend(neg);
    shuffle(&mut pos, derive_seed(seed, STREAM_SET_ORDER + set as u64));
    InteractionCorpus::new(pos, format!("{provenance} [{set}]"))
}

fn check_balanced(corpus: &InteractionCorpus) -> Result<(), DatasetError> {
    if corpus.is_balanced() {
        Ok(())
    } else {
        Err(DatasetError::ImbalancedCorpus {
            positives: corpus.positives(),
            negatives: corpus.negatives(),
        })
    }
}

/// Random three-way partition, each class split separately by `ratios`.
///
/// Per class of `n` pairs, validation and test receive `floor(n * ratio)`
/// pairs and training the rest. Two orientations of one couple move
/// together; when that leaves a set's classes unequal, the surplus is
/// discarded and reported.
pub fn split_regular(
    corpus: &InteractionCorpus,
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    ratios.validate()?;
    check_balanced(corpus)?;
    let n = corpus.positives();
    let targets = [share(n, ratios.validation), share(n, ratios.test)];
    let split_class = |label, stream| {
        let mut b = fill(class_units(&corpus.pairs, label, derive_seed(seed, stream)), &targets);
        let train = b.pop().unwrap_or_default();
        let test = b.pop().unwrap_or_default();
        let val = b.pop().unwrap_or_default();
        (train, val, test)
    };
    let (p_train, p_val, p_test) = split_class(true, STREAM_POSITIVE);
    let (n_train, n_val, n_test) = split_class(false, STREAM_NEGATIVE);
    let mut discarded = Vec::new();
    let prov = &corpus.provenance;
    let train = join_balanced(p_train, n_train, SetName::Train, seed, prov, &mut discarded);
    let validation = join_balanced(p_val, n_val, SetName::Validation, seed, prov, &mut discarded);
    let test = join_balanced(p_test, n_test, SetName::Test, seed, prov, &mut discarded);
    Ok(DatasetSplit {
        train,
        validation,
        test,
        kind: SplitKind::Regular,
        augmented: false,
        discarded,
    })
}

/// Number of pair slots each protein id fills; a self-pair counts twice.
pub fn protein_occurrences(corpus: &InteractionCorpus) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for p in &corpus.pairs {
        *counts.entry(p.a.id.clone()).or_insert(0) += 1;
        *counts.entry(p.b.id.clone()).or_insert(0) += 1;
    }
    counts
}

/// Test set of unseen proteins.
///
/// Candidates are the couples with at least one protein occurring at most
/// twice in the corpus. Each class of candidates is subsampled to the smaller
/// class; unselected candidates are discarded so no rare protein reaches
/// training or validation. The remaining couples are downsampled to equal
/// classes and split per class, validation receiving `floor(n * val_fraction)`.
pub fn split_strict(
    corpus: &InteractionCorpus,
    val_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(DatasetError::InvalidRatios(format!(
            "validation fraction {val_fraction} outside [0, 1)"
        )));
    }
    check_balanced(corpus)?;
    let occ = protein_occurrences(corpus);
    let rare = |p: &InteractionPair| occ[&p.a.id] <= 2 || occ[&p.b.id] <= 2;
    let (candidates, rest): (Vec<_>, Vec<_>) = corpus.pairs.iter().cloned().partition(rare);
    let cand_pos = class_units(&candidates, true, derive_seed(seed, STREAM_TEST_POSITIVE));
    let cand_neg = class_units(&candidates, false, derive_seed(seed, STREAM_TEST_NEGATIVE));
    let m = size(&cand_pos).min(size(&cand_neg));
    if m == 0 {
        return Err(DatasetError::EmptyStrictTest);
    }
    let mut discarded = Vec::new();
    let mut take_test = |units: Vec<Unit>| {
        let mut b = fill(units, &[m]);
        for pair in b.pop().unwrap_or_default() {
            discarded.push(Discard {
                pair,
                set: None,
                reason: DiscardReason::UnselectedStrictCandidate,
            });
        }
        b.pop().unwrap_or_default()
    };
    let t_pos = take_test(cand_pos);
    let t_neg = take_test(cand_neg);

    let rest_pos = class_units(&rest, true, derive_seed(seed, STREAM_POSITIVE));
    let rest_neg = class_units(&rest, false, derive_seed(seed, STREAM_NEGATIVE));
    let r = size(&rest_pos).min(size(&rest_neg));
    let targets = [share(r, val_fraction), r - share(r, val_fraction)];
    let mut split_class = |units: Vec<Unit>| {
        let mut b = fill(units, &targets);
        for pair in b.pop().unwrap_or_default() {
            discarded.push(Discard {
                pair,
                set: None,
                reason: DiscardReason::Rebalance,
            });
        }
        let train = b.pop().unwrap_or_default();
        let val = b.pop().unwrap_or_default();
        (train, val)
    };
    let (p_train, p_val) = split_class(rest_pos);
    let (n_train, n_val) = split_class(rest_neg);
    let prov = &corpus.provenance;
    let train = join_balanced(p_train, n_train, SetName::Train, seed, prov, &mut discarded);
    let validation = join_balanced(p_val, n_val, SetName::Validation, seed, prov, &mut discarded);
    let test = join_balanced(t_pos, t_neg, SetName::Test, seed, prov, &mut discarded);
    if test.is_empty() {
        return Err(DatasetError::EmptyStrictTest);
    }
    Ok(DatasetSplit {
        train,
        validation,
        test,
        kind: SplitKind::Strict,
        augmented: false,
        discarded,
    })
}

/// Downsamples the larger class (whole couples, seeded) towards the smaller.
/// Returns the kept corpus and the dropped pairs.
pub fn balance_corpus(corpus: &InteractionCorpus, seed: u64) -> (InteractionCorpus, Vec<Discard>) {
    let pos = class_units(&corpus.pairs, true, derive_seed(seed, STREAM_POSITIVE));
    let neg = class_units(&corpus.pairs, false, derive_seed(seed, STREAM_NEGATIVE));
    let n = size(&pos).min(size(&neg));
    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    for class in [pos, neg] {
        let mut b = fill(class, &[n]);
        discarded.extend(b.pop().unwrap_or_default().into_iter().map(|pair| Discard {
            pair,
            set: None,
            reason: DiscardReason::Rebalance,
        }));
        kept.extend(b.pop().unwrap_or_default());
    }
    // Restore corpus order among the kept pairs.
    let position: HashMap<(String, String, bool), usize> = corpus
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.a.id.clone(), p.b.id.clone(), p.label), i))
        .collect();
    kept.sort_by_key(|p| position[&(p.a.id.clone(), p.b.id.clone(), p.label)]);
    let mut out = InteractionCorpus::new(kept, corpus.provenance.clone());
    // Odd leftovers from two-orientation couples.
    if !out.is_balanced() {
        let (p, q) = (out.positives(), out.negatives());
        let surplus_label = p > q;
        let mut surplus = p.abs_diff(q);
        let mut i = out.pairs.len();
        while surplus > 0 && i > 0 {
            i -= 1;
            if out.pairs[i].label == surplus_label {
                let pair = out.pairs.remove(i);
                discarded.push(Discard {
                    pair,
                    set: None,
                    reason: DiscardReason::Rebalance,
                });
                surplus -= 1;
            }
        }
    }
    (out, discarded)
}
