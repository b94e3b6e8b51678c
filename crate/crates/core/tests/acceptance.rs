//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails. Pass criterion numbers to run a subset:
//! `cargo test -p sppi-core --test acceptance -- 7 8`.

mod common;

use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use sppi_core::dataset::{audit_split, split_regular, split_strict, InteractionCorpus, SplitRatios};
use sppi_core::models::*;
use sppi_core::synthetic::*;
use sppi_core::training::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn table(model: &ModelGraph) -> Vec<(String, usize, Vec<usize>)> {
    model
        .summary()
        .into_iter()
        .map(|r| (r.layer, r.params, r.output_shape))
        .collect()
}

fn expected_fc() -> Vec<(&'static str, usize, Vec<usize>)> {
    vec![
        ("Input", 0, vec![1166, 24]),
        ("Flatten", 0, vec![27984]),
        ("Fully connected", 559_700, vec![20]),
        ("Batch normalization", 80, vec![20]),
        ("Fully connected", 420, vec![20]),
        ("Batch normalization", 80, vec![20]),
        ("Concatenation", 0, vec![40]),
        ("Fully connected", 820, vec![20]),
        ("Batch normalization", 80, vec![20]),
        ("Fully connected", 21, vec![1]),
    ]
}

fn expected_recurrent() -> Vec<(&'static str, usize, Vec<usize>)> {
    vec![
        ("Input", 0, vec![1166, 24]),
        ("Convolution 1D", 2405, vec![1147, 5]),
        ("MaxPooling 1D", 0, vec![382, 5]),
        ("Batch normalization", 20, vec![382, 5]),
        ("Convolution 1D", 505, vec![363, 5]),
        ("MaxPooling 1D", 0, vec![121, 5]),
        ("Batch normalization", 20, vec![121, 5]),
        ("Convolution 1D", 505, vec![102, 5]),
        ("MaxPooling 1D", 0, vec![34, 5]),
        ("Batch normalization", 20, vec![34, 5]),
        ("LSTM", 4864, vec![32]),
        ("Concatenation", 0, vec![64]),
        ("Fully connected", 1625, vec![25]),
        ("Batch normalization", 100, vec![25]),
        ("Fully connected", 26, vec![1]),
    ]
}

fn parameter_counts() -> Outcome {
    let fc = build_fc_model(&FcConfig::default(), 0).map_err(|e| e.to_string())?;
    let rec = build_recurrent_model(&RecurrentConfig::default(), 0).map_err(|e| e.to_string())?;
    let counted = |m: &ModelGraph| -> Vec<usize> { table(m).into_iter().map(|r| r.1).filter(|&n| n > 0).collect() };
    ensure(fc.param_count() == 1_121_481, || format!("fc total {}", fc.param_count()))?;
    ensure(counted(&fc) == [559_700, 80, 420, 80, 820, 80, 21], || format!("fc layers {:?}", counted(&fc)))?;
    ensure(rec.param_count() == 10_090, || format!("recurrent total {}", rec.param_count()))?;
    let want = [2405, 20, 505, 20, 505, 20, 4864, 1625, 100, 26];
    ensure(counted(&rec) == want, || format!("recurrent layers {:?}", counted(&rec)))?;
    Ok(format!("fc {} / recurrent {}", fc.param_count(), rec.param_count()))
}

fn shapes() -> Outcome {
    let fc = build_fc_model(&FcConfig::default(), 0).map_err(|e| e.to_string())?;
    let rec = build_recurrent_model(&RecurrentConfig::default(), 0).map_err(|e| e.to_string())?;
    for (name, model, want) in [("fc", &fc, expected_fc()), ("recurrent", &rec, expected_recurrent())] {
        let got = table(model);
        ensure(got.len() == want.len(), || format!("{name}: {} rows, expected {}", got.len(), want.len()))?;
        for (i, (g, w)) in got.iter().zip(&want).enumerate() {
            ensure(g.0 == w.0 && g.1 == w.1 && g.2 == w.2, || format!("{name} row {i}: {g:?}, expected {w:?}"))?;
        }
    }
    let chain: Vec<Vec<usize>> = table(&rec)
        .into_iter()
        .filter(|r| r.0 != "Batch normalization")
        .map(|r| r.2)
        .collect();
    let want: Vec<Vec<usize>> = vec![
        vec![1166, 24],
        vec![1147, 5],
        vec![382, 5],
        vec![363, 5],
        vec![121, 5],
        vec![102, 5],
        vec![34, 5],
        vec![32],
        vec![64],
        vec![25],
        vec![1],
    ];
    ensure(chain == want, || format!("chain {chain:?}"))?;
    let d = EncodedDataset::from_corpus(&random_labelled_pairs(2, 1, 1166, 1), 1166).map_err(|e| e.to_string())?;
    let (a, b, _) = d.batch(&[0, 1]);
    let mut rec = rec;
    let p = rec.forward_pair(&a, &b, sppi_core::nn::Mode::Train).map_err(|e| e.to_string())?;
    ensure(p.shape() == [2, 1], || format!("output shape {:?}", p.shape()))?;
    Ok(format!("{} fc rows, {} recurrent rows, forward output (2, 1)", expected_fc().len(), want.len() + 4))
}

fn gradients() -> Outcome {
    let cases = common::gradient_suite();
    let checked: usize = cases.iter().map(|c| c.1.checked).sum();
    let (worst_name, worst) = cases
        .iter()
        .max_by(|a, b| a.1.max_rel.total_cmp(&b.1.max_rel))
        .ok_or("no gradient cases")?;
    let failing: Vec<String> = cases
        .iter()
        .filter(|c| c.1.max_rel.is_nan() || c.1.max_rel >= 1e-4)
        .map(|c| format!("{}: {:.2e} at {}", c.0, c.1.max_rel, c.1.worst))
        .collect();
    ensure(failing.is_empty(), || failing.join("; "))?;
    Ok(format!(
        "{} cases, {checked} entries, max rel err {:.2e} ({worst_name})",
        cases.len(),
        worst.max_rel
    ))
}

fn dataset_invariants() -> Outcome {
    let (corpus, _) = toy_corpus(&ToyCorpusConfig::default());
    ensure(corpus.len() == 10_000 && corpus.is_balanced(), || format!("toy corpus {}", corpus.len()))?;
    let regular = split_regular(&corpus, SplitRatios::default(), 1).map_err(|e| e.to_string())?;
    let strict = split_strict(&corpus, 0.1, 1).map_err(|e| e.to_string())?;
    let mut failures = common::split_invariant_failures(&corpus, &regular);
    failures.extend(common::split_invariant_failures(&corpus, &strict));
    ensure(failures.is_empty(), || failures.join("; "))?;
    let report = audit_split(&strict);
    Ok(format!(
        "regular {:?} +{} discarded, strict {:?} +{} discarded, strict violations {}",
        regular.sizes(),
        regular.discarded.len(),
        strict.sizes(),
        strict.discarded.len(),
        report.strictness_violations.unwrap_or(0)
    ))
}

fn scheduler() -> Outcome {
    let allowed = [0.001, 0.0009, 0.00081, 0.0008];
    let history = vec![1.0; 6];
    ensure(plateau_schedule(&history[..5], 0.001) == 0.001, || "reduced after 4 flat epochs".into())?;
    ensure(plateau_schedule(&history, 0.001) == 0.0009, || "no 0.0009 after 5 flat epochs".into())?;
    let mut lr = 0.001;
    let mut seen = Vec::new();
    for n in 1..=40 {
        lr = plateau_schedule(&vec![1.0; n], lr);
        seen.push(lr);
    }
    seen.dedup();
    ensure(seen == allowed, || format!("flat schedule {seen:?}"))?;

    let mut runner = TestRunner::new(Config {
        cases: 2000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = prop::collection::vec(prop_oneof![Just(0.5), 0.0f64..1.0], 1..120);
    runner
        .run(&strategy, |losses| {
            let mut lr = 0.001;
            let mut stateful = PlateauScheduler::new(0.001, 5, 0.9, 0.0008);
            for i in 1..=losses.len() {
                let next = plateau_schedule(&losses[..i], lr);
                prop_assert!(next >= 0.0008);
                prop_assert!(allowed.contains(&next), "rate {}", next);
                prop_assert!(next == lr || next == reduce_lr(lr, 0.9, 0.0008));
                prop_assert_eq!(next, stateful.observe(losses[i - 1]));
                lr = next;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("0.001 -> 0.0009 after 5 flat epochs, floor 0.0008 held over 2000 random histories".into())
}

fn checkpoint_protocol() -> Outcome {
    let corpus = motif_corpus(&MotifCorpusConfig {
        pairs: 600,
        seed: 6,
        ..MotifCorpusConfig::default()
    });
    let (tr, va) = corpus.pairs.split_at(480);
    let encode = |p: &[sppi_core::dataset::InteractionPair]| {
        EncodedDataset::from_corpus(&InteractionCorpus::new(p.to_vec(), ""), 48).map_err(|e| e.to_string())
    };
    let (tr, va) = (encode(tr)?, encode(va)?);
    let cfg = RecurrentConfig {
        max_len: 48,
        kernel_size: 5,
        pool_size: 2,
        ..RecurrentConfig::default()
    };
    let model = build_recurrent_model(&cfg, 2).map_err(|e| e.to_string())?;
    let config = TrainingConfig {
        batch_size: 32,
        max_epochs: 12,
        seed: 6,
        ..TrainingConfig::default()
    };
    let out = train(model, &tr, &va, &config).map_err(|e| e.to_string())?;
    let logged = out.log.best().and_then(|r| r.val_loss).ok_or("no best epoch")?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("best.ckpt");
    save_checkpoint(&out.best, &path).map_err(|e| e.to_string())?;
    let mut loaded = load_checkpoint_as(&path, ModelKind::Recurrent).map_err(|e| e.to_string())?;
    let (loss, _) = evaluate_loss(&mut loaded.model, &va).map_err(|e| e.to_string())?;
    ensure((loss - logged).abs() <= 1e-9, || format!("re-evaluated {loss} vs logged {logged}"))?;
    let mut in_memory = out.best.model.clone();
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    let before = bits(predict(&mut in_memory, &va).map_err(|e| e.to_string())?);
    let after = bits(predict(&mut loaded.model, &va).map_err(|e| e.to_string())?);
    ensure(before == after, || "infer outputs differ after reload".into())?;
    let resaved = to_bytes(&loaded);
    let reloaded = from_bytes(&resaved).map_err(|e| e.to_string())?;
    ensure(to_bytes(&reloaded) == resaved, || "second round trip changed the bytes".into())?;
    ensure(std::fs::read(&path).map_err(|e| e.to_string())? == resaved, || "file bytes changed on resave".into())?;
    Ok(format!(
        "best epoch {}, logged {logged:.12}, reloaded {loss:.12}, |diff| {:.1e}",
        out.best.epoch,
        (loss - logged).abs()
    ))
}

fn overfit() -> Outcome {
    let max_len = 64;
    let corpus = random_labelled_pairs(32, 8, max_len, 3);
    let d = EncodedDataset::from_corpus(&corpus, max_len).map_err(|e| e.to_string())?;
    let cfg = RecurrentConfig::scaled(max_len).map_err(|e| e.to_string())?;
    let model = build_recurrent_model(&cfg, 1).map_err(|e| e.to_string())?;
    let config = TrainingConfig {
        batch_size: 32,
        max_epochs: 200,
        seed: 1,
        ..TrainingConfig::default()
    };
    let mut first = None;
    let out = train_with(model, &d, &d, &config, |r| {
        if r.train_acc == 1.0 && first.is_none() {
            first = Some(r.epoch);
        }
    })
    .map_err(|e| e.to_string())?;
    let epoch = first.ok_or_else(|| {
        let best = out.log.epochs.iter().map(|r| r.train_acc).fold(0.0, f64::max);
        format!("best train accuracy {best}")
    })?;
    Ok(format!(
        "100% train accuracy at epoch {epoch} (max_len {max_len}, kernel {}, pool {})",
        cfg.kernel_size, cfg.pool_size
    ))
}

fn learnability() -> Outcome {
    let motif = MotifCorpusConfig {
        seed: 8,
        ..MotifCorpusConfig::default()
    };
    let corpus = motif_corpus(&motif);
    ensure(corpus.len() == 5000, || format!("{} pairs", corpus.len()))?;
    let oracle = |s: &str| {
        let (s, m) = (s.as_bytes(), motif.motif.as_bytes());
        s.windows(m.len()).any(|w| w == m)
    };
    let wrong = corpus
        .pairs
        .iter()
        .filter(|p| p.label != (oracle(&p.a.sequence) && oracle(&p.b.sequence)))
        .count();
    ensure(wrong == 0, || format!("{wrong} labels disagree with the motif oracle"))?;
    let split = split_regular(&corpus, SplitRatios::default(), 8).map_err(|e| e.to_string())?;
    let tr = EncodedDataset::from_corpus(&split.train, motif.max_len).map_err(|e| e.to_string())?;
    let va = EncodedDataset::from_corpus(&split.validation, motif.max_len).map_err(|e| e.to_string())?;
    let cfg = RecurrentConfig {
        max_len: motif.max_len,
        kernel_size: 5,
        pool_size: 2,
        ..RecurrentConfig::default()
    };
    let model = build_recurrent_model(&cfg, 8).map_err(|e| e.to_string())?;
    let config = TrainingConfig {
        batch_size: 64,
        max_epochs: 30,
        seed: 8,
        ..TrainingConfig::default()
    };
    let out = train(model, &tr, &va, &config).map_err(|e| e.to_string())?;
    let mut best = out.best.model;
    let (_, acc) = evaluate_loss(&mut best, &va).map_err(|e| e.to_string())?;
    ensure(acc >= 0.95, || format!("validation accuracy {acc}"))?;
    Ok(format!(
        "validation accuracy {acc:.4} at epoch {} ({} train / {} validation pairs)",
        out.best.epoch,
        tr.len(),
        va.len()
    ))
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "parameter counts", Duration::from_secs(1), parameter_counts),
        (2, "layer output shapes", Duration::from_secs(1), shapes),
        (3, "finite-difference gradients", Duration::from_secs(120), gradients),
        (4, "dataset invariants on 10k toy corpus", Duration::from_secs(30), dataset_invariants),
        (5, "plateau schedule property", Duration::from_secs(1), scheduler),
        (6, "checkpoint protocol", Duration::from_secs(120), checkpoint_protocol),
        (7, "overfit 32 samples", Duration::from_secs(300), overfit),
        (8, "motif learnability", Duration::from_secs(900), learnability),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|detail| {
            if took <= budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {took:.1?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(detail) => println!("criterion {n} PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
