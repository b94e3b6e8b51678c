use sppi_core::models::*;
use sppi_core::synthetic::random_labelled_pairs;
use sppi_core::training::*;

fn data(n: usize, max_len: usize, seed: u64) -> EncodedDataset {
    EncodedDataset::from_corpus(&random_labelled_pairs(n, 4, max_len, seed), max_len).unwrap()
}

fn quick_config(epochs: usize) -> TrainingConfig {
    TrainingConfig {
        batch_size: 16,
        max_epochs: epochs,
        seed: 3,
        ..TrainingConfig::default()
    }
}

fn recurrent(max_len: usize, seed: u64) -> ModelGraph {
    build_recurrent_model(&RecurrentConfig::scaled(max_len).unwrap(), seed).unwrap()
}

#[test]
fn training_is_deterministic() {
    let (tr, va) = (data(40, 16, 1), data(16, 16, 2));
    let a = train(recurrent(16, 4), &tr, &va, &quick_config(4)).unwrap();
    let b = train(recurrent(16, 4), &tr, &va, &quick_config(4)).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(to_bytes(&a.best), to_bytes(&b.best));
}

#[test]
fn best_epoch_has_lowest_validation_loss() {
    let (tr, va) = (data(40, 16, 5), data(16, 16, 6));
    let out = train(recurrent(16, 7), &tr, &va, &quick_config(8)).unwrap();
    let best = out.log.best_epoch.unwrap();
    assert_eq!(out.best.epoch, best);
    let min = out.log.epochs.iter().map(|r| r.val_loss.unwrap()).fold(f64::INFINITY, f64::min);
    assert_eq!(out.log.best().unwrap().val_loss, Some(min));
    assert_eq!(out.log.epochs.iter().position(|r| r.val_loss == Some(min)), Some(best - 1));
    let mut model = out.best.model.clone();
    let (loss, _) = evaluate_loss(&mut model, &va).unwrap();
    assert!((loss - min).abs() < 1e-12);
}

#[test]
fn checkpoint_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (tr, va) = (data(24, 12, 8), data(8, 12, 9));
    let out = train(build_fc_model(&FcConfig::with_max_len(12), 1).unwrap(), &tr, &va, &quick_config(2)).unwrap();
    let path = dir.path().join("best.ckpt");
    save_checkpoint(&out.best, &path).unwrap();
    let mut back = load_checkpoint_as(&path, ModelKind::FullyConnected).unwrap();
    assert_eq!(back.training, out.best.training);
    let mut original = out.best.model.clone();
    assert_eq!(predict(&mut original, &va).unwrap(), predict(&mut back.model, &va).unwrap());
    assert_eq!(
        load_checkpoint_as(&path, ModelKind::Recurrent).unwrap_err(),
        CheckpointError::ModelKindMismatch {
            expected: ModelKind::Recurrent,
            found: ModelKind::FullyConnected
        }
    );
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(CheckpointError::CorruptFile(_))));
    assert!(matches!(load_checkpoint(&dir.path().join("none")), Err(CheckpointError::IoFailure(_))));
}

#[test]
fn retrain_with_zero_epochs_is_fresh_init() {
    let merged = data(10, 10, 10);
    let cfg = RecurrentConfig::scaled(10).unwrap();
    let config = quick_config(3);
    let ckpt = retrain_final(&ModelConfig::Recurrent(cfg.clone()), &merged, 0, &config, &[]).unwrap();
    let fresh = build_recurrent_model(&cfg, config.seed).unwrap();
    assert_eq!(ckpt.epoch, 0);
    for (p, q) in ckpt.model.params().iter().zip(fresh.params()) {
        assert_eq!(p.value, q.value);
    }
}

#[test]
fn retrain_replays_the_logged_rates() {
    let merged = data(20, 10, 11);
    let cfg = ModelConfig::Recurrent(RecurrentConfig::scaled(10).unwrap());
    let mut rates = Vec::new();
    retrain_final_with(&cfg, &merged, 4, &quick_config(4), &[0.001, 0.0009], |r| rates.push(r.lr)).unwrap();
    assert_eq!(rates, vec![0.001, 0.0009, 0.0009, 0.0009]);
}

#[test]
fn invalid_inputs_rejected() {
    let (tr, va) = (data(8, 10, 12), data(4, 10, 13));
    let empty = EncodedDataset::from_corpus(&random_labelled_pairs(0, 1, 2, 0), 10).unwrap();
    assert!(matches!(
        train(recurrent(10, 1), &empty, &va, &quick_config(1)),
        Err(TrainingError::EmptyDataset)
    ));
    assert!(matches!(
        train(recurrent(10, 1), &tr, &va, &quick_config(0)),
        Err(TrainingError::InvalidConfig(_))
    ));
    let mismatched = data(8, 12, 12);
    assert!(matches!(
        train(recurrent(10, 1), &mismatched, &va, &quick_config(1)),
        Err(TrainingError::Nn(_))
    ));
}

#[test]
fn metrics_and_log_outputs() {
    let (tr, va) = (data(16, 10, 14), data(8, 10, 15));
    let out = train(recurrent(10, 2), &tr, &va, &quick_config(3)).unwrap();
    let mut model = out.best.model;
    let report = evaluate(&mut model, &va, DEFAULT_THRESHOLD).unwrap();
    assert_eq!(report.total(), 8);
    assert_eq!(report.to_json()["fn"], report.fn_);
    let csv = out.log.to_csv();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(TrainingLog::from_csv(&csv).unwrap().epochs, out.log.epochs);
    let probs = predict(&mut model, &va).unwrap();
    let sweep = threshold_sweep(&probs, va.labels(), 10);
    assert_eq!(sweep.len(), 11);
    assert_eq!(sweep[0].metrics.recall, Some(1.0));
}
