#![allow(dead_code)]

use rand::Rng;

use sppi_core::dataset::{
    audit_split, augment_mirrors, is_mirror_closed, DatasetSplit, InteractionCorpus, InteractionPair, SetName,
    SplitKind,
};

use sppi_core::models::{build_fc_model, build_recurrent_model, FcConfig, ModelGraph, RecurrentConfig};
use sppi_core::nn::{
    Activation, ActivationLayer, Activations, BatchNorm, Conv1d, Dense, Flatten, Layer, Lstm,
    MaxPool1d, Mode, OneHotBatch, Tensor,
};
use sppi_core::rng::seeded;
use sppi_core::synthetic::random_labelled_pairs;
use sppi_core::training::{bce_loss, EncodedDataset};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a| + |n|, 1e-6)`.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

#[derive(Debug, Default, Clone)]
pub struct FdReport {
    pub checked: usize,
    pub max_rel: f64,
    pub worst: String,
}

impl FdReport {
    pub fn record(&mut self, what: impl FnOnce() -> String, analytic: f64, numeric: f64) {
        self.checked += 1;
        let r = rel_err(analytic, numeric);
        if r >= self.max_rel {
            self.max_rel = r;
            self.worst = format!("{} analytic {analytic:e} numeric {numeric:e}", what());
        }
    }

    pub fn merge(&mut self, other: FdReport) {
        self.checked += other.checked;
        if other.max_rel >= self.max_rel {
            self.max_rel = other.max_rel;
            self.worst = other.worst;
        }
    }
}

pub fn random_tensor(shape: &[usize], seed: u64, low: f64, high: f64) -> Tensor {
    let mut rng = seeded(seed);
    let n = shape.iter().product();
    Tensor::from_vec(shape.to_vec(), (0..n).map(|_| rng.gen_range(low..high)).collect()).unwrap()
}

fn weighted_sum(y: &Tensor, w: &Tensor) -> f64 {
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

fn layer_loss(layer: &Layer, input: &Activations, w: &Tensor, mode: Mode) -> f64 {
    let mut l = layer.clone();
    let (y, _) = l.forward(input, mode).unwrap();
    weighted_sum(&y.to_dense(), w)
}

/// Checks every parameter entry (at most `max_per_param` per tensor, evenly
/// strided) and, for dense inputs, every input entry of `layer` under the
/// loss `sum(w * y)` with random fixed `w`.
pub fn check_layer(layer: &Layer, input: &Activations, mode: Mode, max_per_param: usize, seed: u64) -> FdReport {
    let mut probe = layer.clone();
    for p in probe.params_mut() {
        p.zero_grad();
    }
    let (y, cache) = probe.forward(input, mode).unwrap();
    let mut out_shape = vec![y.batch()];
    out_shape.extend(y.sample_shape());
    let w = random_tensor(&out_shape, seed, -1.0, 1.0);
    let dx = probe.backward(&cache, &w, true).unwrap();

    let mut report = FdReport::default();
    let n_params = layer.params().len();
    for pi in 0..n_params {
        let (name, len, trainable) = {
            let p = layer.params()[pi];
            (p.name.clone(), p.len(), p.trainable)
        };
        if !trainable {
            continue;
        }
        let stride = len.div_ceil(max_per_param).max(1);
        for k in (0..len).step_by(stride) {
            let eval = |delta: f64| {
                let mut l = layer.clone();
                l.params_mut()[pi].value.data_mut()[k] += delta;
                layer_loss(&l, input, &w, mode)
            };
            let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
            let analytic = probe.params()[pi].grad.data()[k];
            report.record(|| format!("{name}[{k}]"), analytic, numeric);
        }
    }
    if let (Activations::Dense(x), Some(dx)) = (input, dx) {
        for k in 0..x.len() {
            let eval = |delta: f64| {
                let mut xp = x.clone();
                xp.data_mut()[k] += delta;
                layer_loss(layer, &Activations::Dense(xp), &w, mode)
            };
            let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
            report.record(|| format!("input[{k}]"), dx.data()[k], numeric);
        }
    }
    report
}

fn model_loss(model: &ModelGraph, data: &EncodedDataset, rows: &[usize]) -> f64 {
    let mut m = model.clone();
    let (a, b, y) = data.batch(rows);
    let p = m.forward_pair(&a, &b, Mode::Train).unwrap();
    bce_loss(&p, &y).unwrap().0
}

/// Whole-model check of the BCE loss of one training-mode batch.
pub fn check_model(model: &ModelGraph, data: &EncodedDataset, max_per_param: usize) -> FdReport {
    let rows: Vec<usize> = (0..data.len()).collect();
    let mut probe = model.clone();
    let (a, b, y) = data.batch(&rows);
    let p = probe.forward_pair(&a, &b, Mode::Train).unwrap();
    let (_, g) = bce_loss(&p, &y).unwrap();
    probe.backward_pair(&g).unwrap();
    let names: Vec<(String, usize)> = model
        .params()
        .iter()
        .filter(|p| p.trainable)
        .map(|p| (p.name.clone(), p.len()))
        .collect();
    let mut report = FdReport::default();
    for (name, len) in names {
        let stride = len.div_ceil(max_per_param).max(1);
        for k in (0..len).step_by(stride) {
            let eval = |delta: f64| {
                let mut m = model.clone();
                m.param_mut(&name).unwrap().value.data_mut()[k] += delta;
                model_loss(&m, data, &rows)
            };
            let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
            let analytic = probe.param(&name).unwrap().grad.data()[k];
            report.record(|| format!("{name}[{k}]"), analytic, numeric);
        }
    }
    report
}

/// Order-sensitive digest of every parameter value.
pub fn checksum(values: impl IntoIterator<Item = f64>) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn randomize_batch_norm(layer: &mut Layer, seed: u64) {
    if let Layer::BatchNorm(bn) = layer {
        bn.gamma.value = random_tensor(&[bn.features], seed, 0.5, 1.5);
        bn.beta.value = random_tensor(&[bn.features], seed + 1, -0.5, 0.5);
    }
}

fn onehot(batch: usize, rows: usize, seed: u64, flat: bool) -> Activations {
    let mut rng = seeded(seed);
    let hots = (0..batch)
        .map(|_| {
            let len = rng.gen_range(1..=rows);
            (0..len).map(|_| rng.gen_range(0..24u8)).collect()
        })
        .collect();
    let o = OneHotBatch::new(rows, 24, hots).unwrap();
    Activations::OneHot(if flat { o.flattened() } else { o })
}

/// Zero-initialised biases put every padded position exactly on the ReLU
/// kink, where the derivative is one-sided; move them off it.
pub fn jitter_biases(model: &mut ModelGraph, seed: u64) {
    let mut rng = seeded(seed);
    for p in model.params_mut() {
        if p.name.ends_with("/bias") {
            for v in p.value.data_mut() {
                *v += rng.gen_range(-0.1..0.1);
            }
        }
    }
}

/// Finite-difference checks of every layer kind and of both models at small
/// padded lengths. Returns one labelled report per case.
pub fn gradient_suite() -> Vec<(String, FdReport)> {
    let mut rng = seeded(11);
    let mut cases: Vec<(String, FdReport)> = Vec::new();
    let x2 = Activations::Dense(random_tensor(&[3, 5], 1, -1.0, 1.0));
    let x3 = Activations::Dense(random_tensor(&[3, 9, 4], 2, -1.0, 1.0));
    for act in [Activation::Linear, Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        let dense = Layer::Dense(Dense::new("dense", 5, 4, act, &mut rng));
        cases.push((format!("dense {}", act.name()), check_layer(&dense, &x2, Mode::Train, 64, 3)));
        let conv = Layer::Conv1D(Conv1d::new("conv", 4, 3, 3, act, &mut rng));
        cases.push((format!("conv1d {}", act.name()), check_layer(&conv, &x3, Mode::Train, 64, 4)));
    }
    let dense_oh = Layer::Dense(Dense::new("dense", 7 * 24, 3, Activation::Tanh, &mut rng));
    cases.push((
        "dense on flattened one-hot".into(),
        check_layer(&dense_oh, &onehot(3, 7, 5, true), Mode::Train, 200, 6),
    ));
    let conv_oh = Layer::Conv1D(Conv1d::new("conv", 24, 3, 4, Activation::Tanh, &mut rng));
    cases.push((
        "conv1d on one-hot".into(),
        check_layer(&conv_oh, &onehot(3, 9, 7, false), Mode::Train, 300, 8),
    ));
    let pool = Layer::MaxPool1D(MaxPool1d::new("pool", 3).unwrap());
    let x_pool = Activations::Dense(random_tensor(&[2, 10, 3], 9, -1.0, 1.0));
    cases.push(("max pooling".into(), check_layer(&pool, &x_pool, Mode::Train, 64, 10)));
    for (label, x) in [("batch norm (batch, features)", &x2), ("batch norm (batch, steps, channels)", &x3)] {
        let features = *x.sample_shape().last().unwrap();
        let mut bn = Layer::BatchNorm(BatchNorm::new("bn", features));
        randomize_batch_norm(&mut bn, 12);
        cases.push((format!("{label} train"), check_layer(&bn, x, Mode::Train, 64, 13)));
        bn.forward(x, Mode::Train).unwrap();
        cases.push((format!("{label} infer"), check_layer(&bn, x, Mode::Infer, 64, 14)));
    }
    let lstm = Layer::Lstm(Lstm::new("lstm", 4, 5, &mut rng));
    let x_seq = Activations::Dense(random_tensor(&[3, 6, 4], 15, -1.0, 1.0));
    cases.push(("lstm".into(), check_layer(&lstm, &x_seq, Mode::Train, 200, 16)));
    for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        let layer = Layer::Activation(ActivationLayer { name: "act".into(), kind: act });
        cases.push((format!("activation {}", act.name()), check_layer(&layer, &x2, Mode::Train, 64, 17)));
    }
    let flat = Layer::Flatten(Flatten { name: "flatten".into() });
    cases.push(("flatten".into(), check_layer(&flat, &x3, Mode::Train, 64, 18)));

    let data = |max_len: usize, seed: u64| {
        let corpus = random_labelled_pairs(6, 1, max_len, seed);
        EncodedDataset::from_corpus(&corpus, max_len).unwrap()
    };
    let mut fc = build_fc_model(&FcConfig::with_max_len(8), 21).unwrap();
    jitter_biases(&mut fc, 25);
    cases.push(("fully connected model, max_len 8".into(), check_model(&fc, &data(8, 22), 120)));
    for max_len in [6, 64] {
        let cfg = RecurrentConfig::scaled(max_len).unwrap();
        let mut rec = build_recurrent_model(&cfg, 23).unwrap();
        jitter_biases(&mut rec, 26);
        cases.push((
            format!("recurrent model, max_len {max_len}"),
            check_model(&rec, &data(max_len, 24), 120),
        ));
    }
    cases
}

/// Checks the structural invariants of a split built from `corpus` and of
/// its mirror augmentation. Returns the failures found, empty when clean.
pub fn split_invariant_failures(corpus: &InteractionCorpus, split: &DatasetSplit) -> Vec<String> {
    let mut failures = Vec::new();
    let triples = |pairs: &mut dyn Iterator<Item = &InteractionPair>| {
        let mut v: Vec<(String, String, bool)> =
            pairs.map(|p| (p.a.id.clone(), p.b.id.clone(), p.label)).collect();
        v.sort();
        v
    };
    let expected = triples(&mut corpus.pairs.iter());
    let mut placed = SetName::ALL
        .iter()
        .flat_map(|&s| split.set(s).pairs.iter())
        .chain(split.discarded.iter().map(|d| &d.pair));
    if triples(&mut placed) != expected {
        failures.push(format!("{}: sets plus discards do not partition the corpus", split.kind));
    }
    let check_balance = |failures: &mut Vec<String>, s: &DatasetSplit, what: &str| {
        for name in SetName::ALL {
            let set = s.set(name);
            if set.positives().abs_diff(set.negatives()) > 1 {
                failures.push(format!(
                    "{what} {}: {} positives vs {} negatives",
                    name.as_str(),
                    set.positives(),
                    set.negatives()
                ));
            }
        }
    };
    check_balance(&mut failures, split, &split.kind.to_string());
    let report = audit_split(split);
    if report.couple_overlap.total() != 0 {
        failures.push(format!("{}: couple overlap {:?}", split.kind, report.couple_overlap));
    }
    if split.kind == SplitKind::Strict && report.strictness_violations != Some(0) {
        failures.push(format!("strict: violations {:?}", report.strictness_violations));
    }
    match augment_mirrors(split) {
        Err(e) => failures.push(format!("{}: augmentation failed: {e}", split.kind)),
        Ok(aug) => {
            let what = format!("{} mirrored", split.kind);
            for name in SetName::ALL {
                let (before, after) = (split.set(name), aug.set(name));
                if after.len() > 2 * before.len() {
                    failures.push(format!("{what} {}: grew {} -> {}", name.as_str(), before.len(), after.len()));
                }
                if !is_mirror_closed(after) {
                    failures.push(format!("{what} {}: not mirror-closed", name.as_str()));
                }
            }
            check_balance(&mut failures, &aug, &what);
            let report = audit_split(&aug);
            if report.couple_overlap.total() != 0 {
                failures.push(format!("{what}: couple overlap {:?}", report.couple_overlap));
            }
            if aug.kind == SplitKind::Strict && report.strictness_violations != Some(0) {
                failures.push(format!("{what}: violations {:?}", report.strictness_violations));
            }
        }
    }
    failures
}
