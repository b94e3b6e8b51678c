//! Generated corpora for tests, demos and the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{sample_negatives, InteractionCorpus, InteractionPair};
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::seq_encoding::ProteinRecord;

/// The 20 standard residues.
pub const STANDARD_RESIDUES: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

pub fn random_sequence(rng: &mut SeededRng, len: usize) -> String {
    (0..len)
        .map(|_| STANDARD_RESIDUES[rng.gen_range(0..STANDARD_RESIDUES.len())] as char)
        .collect()
}

pub fn contains_motif(sequence: &str, motif: &str) -> bool {
    sequence.contains(motif)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifCorpusConfig {
    pub pairs: usize,
    pub motif: String,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for MotifCorpusConfig {
    fn default() -> Self {
        Self {
            pairs: 5000,
            motif: "WHCMY".into(),
            min_len: 24,
            max_len: 48,
            seed: 0,
        }
    }
}

fn sequence_without(rng: &mut SeededRng, len: usize, motif: &str) -> String {
    loop {
        let s = random_sequence(rng, len);
        if !contains_motif(&s, motif) {
            return s;
        }
    }
}

fn sequence_with(rng: &mut SeededRng, len: usize, motif: &str) -> String {
    let len = len.max(motif.len());
    let mut s = sequence_without(rng, len - motif.len(), motif);
    let at = rng.gen_range(0..=s.len());
    s.insert_str(at, motif);
    s
}

/// Pairs labelled 1 exactly when both chains contain `motif`.
///
/// Half the pairs are positive. Negatives are split evenly between
/// (motif, none), (none, motif) and (none, none). Every protein is fresh.
pub fn motif_corpus(cfg: &MotifCorpusConfig) -> InteractionCorpus {
    let mut rng = seeded(cfg.seed);
    let positives = cfg.pairs / 2;
    let mut pairs = Vec::with_capacity(cfg.pairs);
    let mut next_id = 0usize;
    let mut protein = |rng: &mut SeededRng, with: bool| {
        let len = rng.gen_range(cfg.min_len..=cfg.max_len);
        let seq = if with {
            sequence_with(rng, len, &cfg.motif)
        } else {
            sequence_without(rng, len, &cfg.motif)
        };
        next_id += 1;
        ProteinRecord::new(format!("M{next_id:06}"), &seq).expect("standard residues")
    };
    for i in 0..cfg.pairs {
        let (ha, hb) = if i < positives {
            (true, true)
        } else {
            match (i - positives) % 3 {
                0 => (true, false),
                1 => (false, true),
                _ => (false, false),
            }
        };
        let a = protein(&mut rng, ha);
        let b = protein(&mut rng, hb);
        pairs.push(InteractionPair::new(a, b, i < positives));
    }
    pairs.shuffle(&mut rng);
    InteractionCorpus::new(pairs, format!("motif {} corpus (seed {})", cfg.motif, cfg.seed))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyCorpusConfig {
    pub pairs: usize,
    pub proteins: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Per mille of positives that also get their mirror orientation.
    pub mirror_permille: u32,
    pub seed: u64,
}

impl Default for ToyCorpusConfig {
    fn default() -> Self {
        Self {
            pairs: 10_000,
            proteins: 3_000,
            min_len: 20,
            max_len: 60,
            mirror_permille: 20,
            seed: 0,
        }
    }
}

/// A balanced interaction corpus with heavy-tailed protein degrees, so a
/// strict split has rare proteins to work with. Positives pick proteins with
/// weight `1 / rank`; negatives are sampled uniformly from the non-interacting
/// couples. Returns the corpus and the protein list.
pub fn toy_corpus(cfg: &ToyCorpusConfig) -> (InteractionCorpus, Vec<ProteinRecord>) {
    let mut rng = seeded(cfg.seed);
    let proteins: Vec<ProteinRecord> = (0..cfg.proteins)
        .map(|i| {
            let len = rng.gen_range(cfg.min_len..=cfg.max_len);
            ProteinRecord::new(format!("T{i:05}"), &random_sequence(&mut rng, len)).expect("standard residues")
        })
        .collect();
    let weights: Vec<f64> = (1..=cfg.proteins).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect();
    let draw = |rng: &mut SeededRng| {
        let u: f64 = rng.gen();
        cumulative.partition_point(|&c| c < u).min(cfg.proteins - 1)
    };
    let target = cfg.pairs / 2;
    let mut seen = std::collections::HashSet::new();
    let mut pairs = Vec::with_capacity(cfg.pairs);
    while pairs.len() < target {
        let (i, j) = (draw(&mut rng), draw(&mut rng));
        let key = (i.min(j), i.max(j));
        if !seen.insert(key) {
            continue;
        }
        pairs.push(InteractionPair::new(proteins[i].clone(), proteins[j].clone(), true));
        if i != j && pairs.len() < target && rng.gen_range(0..1000) < cfg.mirror_permille {
            pairs.push(InteractionPair::new(proteins[j].clone(), proteins[i].clone(), true));
        }
    }
    let positives = InteractionCorpus::new(pairs, "");
    let negatives = sample_negatives(&positives, &proteins, cfg.pairs - target, derive_seed(cfg.seed, 1))
        .expect("toy pool has room for negatives");
    let mut all = positives.pairs;
    all.extend(negatives.pairs);
    all.shuffle(&mut rng);
    (
        InteractionCorpus::new(all, format!("toy corpus (seed {})", cfg.seed)),
        proteins,
    )
}

/// `n` labelled pairs with random chains, labels alternating; a model has to
/// memorise them.
pub fn random_labelled_pairs(n: usize, min_len: usize, max_len: usize, seed: u64) -> InteractionCorpus {
    let mut rng = seeded(seed);
    let pairs = (0..n)
        .map(|i| {
            let mut rec = |tag: char| {
                let len = rng.gen_range(min_len..=max_len);
                ProteinRecord::new(format!("R{i}{tag}"), &random_sequence(&mut rng, len)).expect("standard residues")
            };
            let a = rec('a');
            let b = rec('b');
            InteractionPair::new(a, b, i % 2 == 0)
        })
        .collect();
    InteractionCorpus::new(pairs, format!("random labelled pairs (seed {seed})"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_contains(seq: &str, motif: &str) -> bool {
        let s = seq.as_bytes();
        let m = motif.as_bytes();
        (0..s.len()).any(|i| i + m.len() <= s.len() && (0..m.len()).all(|k| s[i + k] == m[k]))
    }

    #[test]
    fn motif_labels_follow_rule() {
        let cfg = MotifCorpusConfig {
            pairs: 600,
            ..MotifCorpusConfig::default()
        };
        let c = motif_corpus(&cfg);
        assert_eq!(c.len(), 600);
        assert!(c.is_balanced());
        for p in &c.pairs {
            let rule = brute_force_contains(&p.a.sequence, &cfg.motif) && brute_force_contains(&p.b.sequence, &cfg.motif);
            assert_eq!(p.label, rule);
            assert!(p.a.len() <= cfg.max_len && p.b.len() <= cfg.max_len);
        }
    }

    #[test]
    fn toy_corpus_is_balanced_and_skewed() {
        let cfg = ToyCorpusConfig {
            pairs: 2000,
            proteins: 600,
            ..ToyCorpusConfig::default()
        };
        let (c, prots) = toy_corpus(&cfg);
        assert_eq!(c.len(), 2000);
        assert!(c.is_balanced());
        assert_eq!(prots.len(), 600);
        let occ = crate::dataset::protein_occurrences(&c);
        assert!(occ.values().any(|&n| n <= 2));
        assert!(occ.values().any(|&n| n >= 20));
        assert_eq!(toy_corpus(&cfg).0, c);
    }
}
