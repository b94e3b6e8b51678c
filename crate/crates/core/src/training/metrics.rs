use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Confusion counts and derived scores on the positive class. Ratios with a
/// zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_score: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_score = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f_score,
            tp,
            fp,
            tn,
            fn_,
        }
    }

    /// Scores ≥ `threshold` are predicted positive; labels are 0 or 1.
    pub fn from_scores(scores: &[f64], labels: &[f64], threshold: f64) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= threshold, y >= 0.5) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `key value` lines; undefined ratios are written as `undefined`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let show = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(s, "accuracy {}", show(self.accuracy));
        let _ = writeln!(s, "precision {}", show(self.precision));
        let _ = writeln!(s, "recall {}", show(self.recall));
        let _ = writeln!(s, "f_score {}", show(self.f_score));
        let _ = writeln!(s, "tp {}", self.tp);
        let _ = writeln!(s, "fp {}", self.fp);
        let _ = writeln!(s, "tn {}", self.tn);
        let _ = writeln!(s, "fn {}", self.fn_);
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn_,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub metrics: MetricsReport,
}

/// Metrics at `steps + 1` evenly spaced thresholds from 0 to 1.
pub fn threshold_sweep(scores: &[f64], labels: &[f64], steps: usize) -> Vec<SweepPoint> {
    let steps = steps.max(1);
    (0..=steps)
        .map(|i| {
            let threshold = i as f64 / steps as f64;
            SweepPoint {
                threshold,
                metrics: MetricsReport::from_scores(scores, labels, threshold),
            }
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("threshold,accuracy,precision,recall,f_score,tp,fp,tn,fn\n");
    let show = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
    for p in points {
        let m = &p.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            p.threshold,
            show(m.accuracy),
            show(m.precision),
            show(m.recall),
            show(m.f_score),
            m.tp,
            m.fp,
            m.tn,
            m.fn_
        );
    }
    s
}
