use std::collections::HashSet;

use super::{
    DatasetError, DatasetSplit, Discard, DiscardReason, InteractionCorpus, InteractionPair,
    SetName,
};

/// Every non-self pair `(A, B, l)` has its mirror `(B, A, l)` in the corpus.
pub fn is_mirror_closed(corpus: &InteractionCorpus) -> bool {
    let triples: HashSet<(&str, &str, bool)> = corpus.pairs.iter().map(|p| p.triple()).collect();
    corpus
        .pairs
        .iter()
        .all(|p| triples.contains(&(p.b.id.as_str(), p.a.id.as_str(), p.label)))
}

fn mirror_set(corpus: &InteractionCorpus) -> Vec<InteractionPair> {
    let mut triples: HashSet<(String, String, bool)> = corpus
        .pairs
        .iter()
        .map(|p| (p.a.id.clone(), p.b.id.clone(), p.label))
        .collect();
    let mut out = Vec::with_capacity(corpus.len() * 2);
    for p in &corpus.pairs {
        out.push(p.clone());
        if !p.is_self_pair() && triples.insert((p.b.id.clone(), p.a.id.clone(), p.label)) {
            out.push(p.mirrored());
        }
    }
    out
}

/// Removes whole couples (both orientations, or one self-pair) of the larger
/// class from the end of the set until the classes differ by at most one,
/// using a self-pair to close a gap of one when available.
fn rebalance(pairs: &mut Vec<InteractionPair>, set: SetName, discarded: &mut Vec<Discard>) {
    loop {
        let pos = pairs.iter().filter(|p| p.label).count();
        let neg = pairs.len() - pos;
        let diff = pos.abs_diff(neg);
        if diff == 0 {
            return;
        }
        let label = pos > neg;
        let pick = |want_self: bool| {
            pairs
                .iter()
                .rposition(|p| p.label == label && p.is_self_pair() == want_self)
        };
        let victim = if diff == 1 {
            match pick(true) {
                Some(i) => i,
                None => return,
            }
        } else {
            match pick(false).or_else(|| pick(true)) {
                Some(i) => i,
                None => return,
            }
        };
        let removed = pairs.remove(victim);
        let mirror = (!removed.is_self_pair())
            .then(|| {
                pairs.iter().position(|p| {
                    p.label == removed.label && p.a.id == removed.b.id && p.b.id == removed.a.id
                })
            })
            .flatten();
        if let Some(j) = mirror {
            let m = pairs.remove(j);
            discarded.push(Discard {
                pair: m,
                set: Some(set),
                reason: DiscardReason::Rebalance,
            });
        }
        discarded.push(Discard {
            pair: removed,
            set: Some(set),
            reason: DiscardReason::Rebalance,
        });
    }
}

/// Adds the missing mirror of every couple in every set.
///
/// Sets stay mirror-closed. Mirroring can unbalance a balanced set when one
/// class had more pre-existing mirror couples or self-pairs; whole couples of
/// the larger class are then dropped (and reported) until the classes differ
/// by at most one pair. Sets that were not balanced are only mirrored.
pub fn augment_mirrors(split: &DatasetSplit) -> Result<DatasetSplit, DatasetError> {
    if split.augmented {
        return Err(DatasetError::AlreadyAugmented);
    }
    let mut out = split.clone();
    out.augmented = true;
    let mut discarded = std::mem::take(&mut out.discarded);
    for name in SetName::ALL {
        let set = out.set_mut(name);
        let was_balanced = set.is_balanced();
        let mut pairs = mirror_set(set);
        if was_balanced {
            rebalance(&mut pairs, name, &mut discarded);
        }
        set.pairs = pairs;
        set.provenance = format!("{} + mirrors", set.provenance);
    }
    out.discarded = discarded;
    Ok(out)
}
