use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::Rng;

use super::{DatasetError, InteractionCorpus, InteractionPair};
use crate::rng::seeded;
use crate::seq_encoding::ProteinRecord;

/// Below this many candidate couples the complement is enumerated outright.
const ENUMERATION_LIMIT: u128 = 4_000_000;

fn distinct_sorted(proteins: &[ProteinRecord]) -> Vec<ProteinRecord> {
    let mut map = BTreeMap::new();
    for p in proteins {
        map.entry(p.id.clone()).or_insert_with(|| p.clone());
    }
    map.into_values().collect()
}

/// Index `k` of the lower triangle (diagonal included) to `(i, j)`, `j <= i`.
fn unrank(k: u128) -> (usize, usize) {
    let mut i = (((8.0 * k as f64 + 1.0).sqrt() - 1.0) / 2.0) as u128;
    while i * (i + 1) / 2 > k {
        i -= 1;
    }
    while (i + 1) * (i + 2) / 2 <= k {
        i += 1;
    }
    (i as usize, (k - i * (i + 1) / 2) as usize)
}

fn excluded_indices(positives: &InteractionCorpus, order: &BTreeMap<&str, usize>) -> HashSet<u128> {
    positives
        .pairs
        .iter()
        .filter_map(|p| {
            let x = *order.get(p.a.id.as_str())?;
            let y = *order.get(p.b.id.as_str())?;
            let (i, j) = if x >= y { (x, y) } else { (y, x) };
            Some((i as u128) * (i as u128 + 1) / 2 + j as u128)
        })
        .collect()
}

/// Number of unordered couples (self-couples included) among the distinct
/// proteins that do not interact in either orientation.
pub fn candidate_count(positives: &InteractionCorpus, proteins: &[ProteinRecord]) -> u128 {
    let proteins = distinct_sorted(proteins);
    let order: BTreeMap<&str, usize> = proteins.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let n = proteins.len() as u128;
    n * (n + 1) / 2 - excluded_indices(positives, &order).len() as u128
}

/// Draws `count` distinct non-interacting couples uniformly from the unordered
/// couples of `proteins` (self-couples included) that are not positive in
/// either orientation. Only the positive pairs of `positives` are excluded.
pub fn sample_negatives(
    positives: &InteractionCorpus,
    proteins: &[ProteinRecord],
    count: usize,
    seed: u64,
) -> Result<InteractionCorpus, DatasetError> {
    let proteins = distinct_sorted(proteins);
    let order: BTreeMap<&str, usize> = proteins.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let positive_only = InteractionCorpus::new(
        positives.pairs.iter().filter(|p| p.label).cloned().collect(),
        "",
    );
    let excluded = excluded_indices(&positive_only, &order);
    let n = proteins.len() as u128;
    let total = n * (n + 1) / 2;
    let available = total - excluded.len() as u128;
    if count as u128 > available {
        return Err(DatasetError::InsufficientCandidates {
            requested: count,
            available,
        });
    }
    let mut rng = seeded(seed);
    let chosen: Vec<u128> = if total <= ENUMERATION_LIMIT {
        let candidates: Vec<u128> = (0..total).filter(|k| !excluded.contains(k)).collect();
        index::sample(&mut rng, candidates.len(), count)
            .into_iter()
            .map(|i| candidates[i])
            .collect()
    } else {
        let mut seen = HashSet::with_capacity(count);
        let mut chosen = Vec::with_capacity(count);
        // Rejection stays cheap: this branch needs n > 2800 proteins, where
        // positives cover a small share of the couples unless count nears `available`.
        while chosen.len() < count {
            let k = rng.gen_range(0..total);
            if !excluded.contains(&k) && seen.insert(k) {
                chosen.push(k);
            }
        }
        chosen
    };
    let pairs = chosen
        .into_iter()
        .map(|k| {
            let (i, j) = unrank(k);
            InteractionPair::new(proteins[j].clone(), proteins[i].clone(), false)
        })
        .collect();
    Ok(InteractionCorpus::new(
        pairs,
        format!("sampled negatives (seed {seed})"),
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn proteins(ids: &[&str]) -> Vec<ProteinRecord> {
        ids.iter().map(|id| protein(id)).collect()
    }

    #[test]
    fn unrank_enumerates_lower_triangle() {
        let mut k = 0u128;
        for i in 0..60 {
            for j in 0..=i {
                assert_eq!(unrank(k), (i, j));
                k += 1;
            }
        }
    }

    #[test]
    fn excludes_positive_couples_in_both_orientations() {
        let pos = corpus(&[("P", "Q", true)]);
        let allowed: HashSet<_> = [("P", "R"), ("Q", "R"), ("P", "P"), ("Q", "Q"), ("R", "R")]
            .into_iter()
            .map(|(a, b)| super::super::CoupleKey::new(a, b, false))
            .collect();
        for seed in 0..20 {
            let neg = sample_negatives(&pos, &proteins(&["P", "Q", "R"]), 2, seed).unwrap();
            assert_eq!(neg.len(), 2);
            let keys = neg.couples();
            assert_eq!(keys.len(), 2);
            assert!(keys.iter().all(|k| allowed.contains(k)));
        }
    }

    #[test]
    fn insufficient_candidates() {
        let pos = corpus(&[("P", "Q", true)]);
        let err = sample_negatives(&pos, &proteins(&["P", "Q"]), 5, 1).unwrap_err();
        assert_eq!(
            err,
            DatasetError::InsufficientCandidates {
                requested: 5,
                available: 2
            }
        );
        assert_eq!(candidate_count(&pos, &proteins(&["P", "Q"])), 2);
    }

    #[test]
    fn seeded_draws_repeat() {
        let ids: Vec<String> = (0..40).map(|i| format!("X{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let pos = corpus(&[("X1", "X2", true), ("X3", "X4", true)]);
        let a = sample_negatives(&pos, &proteins(&refs), 30, 9).unwrap();
        let b = sample_negatives(&pos, &proteins(&refs), 30, 9).unwrap();
        let c = sample_negatives(&pos, &proteins(&refs), 30, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.pairs, c.pairs);
    }

    #[test]
    fn rejection_path_respects_exclusions() {
        let ids: Vec<String> = (0..3000).map(|i| format!("L{i:04}")).collect();
        let prots: Vec<ProteinRecord> = ids.iter().map(|id| protein(id)).collect();
        let pos_pairs: Vec<(&str, &str, bool)> =
            (0..2999).map(|i| (ids[i].as_str(), ids[i + 1].as_str(), true)).collect();
        let pos = corpus(&pos_pairs);
        let neg = sample_negatives(&pos, &prots, 5000, 3).unwrap();
        let positives = pos.couples();
        assert_eq!(neg.couples().len(), 5000);
        for p in &neg.pairs {
            assert!(!positives.contains(&super::super::CoupleKey::new(&p.a.id, &p.b.id, true)));
        }
    }
}
