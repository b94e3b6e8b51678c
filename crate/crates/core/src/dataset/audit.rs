use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use super::{DatasetSplit, SetName, SplitKind};

/// One count per unordered pair of sets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SetPairCounts {
    pub train_validation: usize,
    pub train_test: usize,
    pub validation_test: usize,
}

impl SetPairCounts {
    pub fn total(&self) -> usize {
        self.train_validation + self.train_test + self.validation_test
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakReport {
    pub kind: SplitKind,
    pub sizes: [usize; 3],
    /// Distinct couples present in both sets of each pair.
    pub couple_overlap: SetPairCounts,
    /// Distinct protein ids present in both sets of each pair.
    pub protein_overlap: SetPairCounts,
    /// Test proteins that also occur in training or validation.
    pub test_protein_overlap: usize,
    pub test_proteins: usize,
    /// Positive fraction of train, validation and test; `None` for an empty set.
    pub balance: [Option<f64>; 3],
    /// Test couples whose two proteins both occur in training or validation.
    /// Only defined for strict splits.
    pub strictness_violations: Option<usize>,
}

impl LeakReport {
    /// No couple is shared and, for strict splits, every test couple holds an unseen protein.
    pub fn is_clean(&self) -> bool {
        self.couple_overlap.total() == 0 && self.strictness_violations.unwrap_or(0) == 0
    }

    /// `key value` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let fmt_balance = |b: Option<f64>| b.map_or("undefined".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(s, "kind {}", self.kind);
        for (name, size) in SetName::ALL.iter().zip(self.sizes) {
            let _ = writeln!(s, "size.{name} {size}");
        }
        for (label, c) in [("couple_overlap", self.couple_overlap), ("protein_overlap", self.protein_overlap)] {
            let _ = writeln!(s, "{label}.train_validation {}", c.train_validation);
            let _ = writeln!(s, "{label}.train_test {}", c.train_test);
            let _ = writeln!(s, "{label}.validation_test {}", c.validation_test);
        }
        let _ = writeln!(s, "protein_overlap.test_vs_train_validation {}", self.test_protein_overlap);
        let _ = writeln!(s, "test_proteins {}", self.test_proteins);
        for (name, b) in SetName::ALL.iter().zip(self.balance) {
            let _ = writeln!(s, "balance.{name} {}", fmt_balance(b));
        }
        let _ = writeln!(
            s,
            "strictness_violations {}",
            self.strictness_violations
                .map_or("not_applicable".to_string(), |v| v.to_string())
        );
        s
    }
}

fn overlap<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> usize {
    a.intersection(b).count()
}

fn pair_counts<T: Ord>(sets: &[BTreeSet<T>]) -> SetPairCounts {
    SetPairCounts {
        train_validation: overlap(&sets[0], &sets[1]),
        train_test: overlap(&sets[0], &sets[2]),
        validation_test: overlap(&sets[1], &sets[2]),
    }
}

pub fn audit_split(split: &DatasetSplit) -> LeakReport {
    let couples: Vec<_> = SetName::ALL.iter().map(|&n| split.set(n).couples()).collect();
    let proteins: Vec<_> = SetName::ALL.iter().map(|&n| split.set(n).protein_ids()).collect();
    let couple_overlap = pair_counts(&couples);
    let protein_overlap = pair_counts(&proteins);
    let seen: BTreeSet<&str> = proteins[0].union(&proteins[1]).copied().collect();
    let test_protein_overlap = proteins[2].iter().filter(|p| seen.contains(*p)).count();
    let strictness_violations = (split.kind == SplitKind::Strict).then(|| {
        split
            .test
            .pairs
            .iter()
            .filter(|p| seen.contains(p.a.id.as_str()) && seen.contains(p.b.id.as_str()))
            .count()
    });
    LeakReport {
        kind: split.kind,
        sizes: split.sizes(),
        couple_overlap,
        protein_overlap,
        test_protein_overlap,
        test_proteins: proteins[2].len(),
        balance: SetName::ALL.map(|n| split.set(n).balance()),
        strictness_violations,
    }
}
