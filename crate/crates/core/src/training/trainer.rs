use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::data::EncodedDataset;
use super::loss::{bce_loss, bce_per_sample};
use super::metrics::MetricsReport;
use super::schedule::PlateauScheduler;
use super::TrainingError;
use crate::models::{build_model, ModelConfig, ModelGraph};
use crate::nn::Mode;
use crate::rng::{derive_seed, seeded};

/// Samples per forward pass when only predictions are needed.
pub const INFER_CHUNK: usize = 512;

const EPOCH_STREAM: u64 = 0x5EED_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub initial_lr: f64,
    pub plateau_patience: usize,
    pub lr_factor: f64,
    pub lr_floor: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 2048,
            initial_lr: 0.001,
            plateau_patience: 5,
            lr_factor: 0.9,
            lr_floor: 0.0008,
            max_epochs: 100,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: String| Err(TrainingError::InvalidConfig(m));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.lr_factor > 0.0 && self.lr_factor < 1.0) {
            return bad(format!("lr_factor {} outside (0, 1)", self.lr_factor));
        }
        if !(self.initial_lr.is_finite() && self.initial_lr > 0.0) {
            return bad(format!("initial_lr {} must be positive", self.initial_lr));
        }
        if !(self.lr_floor >= 0.0 && self.lr_floor <= self.initial_lr) {
            return bad(format!(
                "lr_floor {} must lie in [0, initial_lr = {}]",
                self.lr_floor, self.initial_lr
            ));
        }
        if self.plateau_patience == 0 {
            return bad("plateau_patience must be at least 1".into());
        }
        Ok(())
    }

    pub fn scheduler(&self) -> PlateauScheduler {
        PlateauScheduler::new(self.initial_lr, self.plateau_patience, self.lr_factor, self.lr_floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
    /// Rate used during the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) with the lowest validation loss, earliest on ties.
    pub best_epoch: Option<usize>,
}

pub const LOG_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc,lr";

impl TrainingLog {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.best_epoch.and_then(|e| self.epochs.get(e - 1))
    }

    pub fn lr_schedule(&self) -> Vec<f64> {
        self.epochs.iter().map(|r| r.lr).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{LOG_HEADER}\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        for r in &self.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.epoch,
                r.train_loss,
                r.train_acc,
                opt(r.val_loss),
                opt(r.val_acc),
                r.lr
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, TrainingError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == LOG_HEADER => {}
            _ => return Err(TrainingError::InvalidConfig(format!("log header must be {LOG_HEADER}"))),
        }
        let mut epochs = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = || TrainingError::InvalidConfig(format!("log row {}: {line:?}", i + 1));
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 6 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            epochs.push(EpochRecord {
                epoch: cols[0].parse().map_err(|_| bad())?,
                train_loss: num(cols[1])?,
                train_acc: num(cols[2])?,
                val_loss: opt(cols[3])?,
                val_acc: opt(cols[4])?,
                lr: num(cols[5])?,
            });
        }
        let best_epoch = best_of(&epochs);
        Ok(Self { epochs, best_epoch })
    }
}

fn best_of(epochs: &[EpochRecord]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for r in epochs {
        if let Some(v) = r.val_loss {
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, r.epoch));
            }
        }
    }
    best.map(|(_, e)| e)
}

/// Weights plus what is needed to rebuild and audit them.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: ModelGraph,
    /// Completed training epochs behind these weights.
    pub epoch: usize,
    pub training: Option<TrainingConfig>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub log: TrainingLog,
    /// Weights at the epoch of minimal validation loss.
    pub best: Checkpoint,
    /// Weights after the last epoch.
    pub last: ModelGraph,
}

/// Interaction probabilities in infer mode.
pub fn predict(model: &mut ModelGraph, data: &EncodedDataset) -> Result<Vec<f64>, TrainingError> {
    if data.is_empty() {
        return Err(TrainingError::EmptyDataset);
    }
    let rows: Vec<usize> = (0..data.len()).collect();
    let mut out = Vec::with_capacity(data.len());
    for chunk in rows.chunks(INFER_CHUNK) {
        let (a, b, _) = data.batch(chunk);
        let p = model.forward_pair(&a, &b, Mode::Infer)?;
        out.extend_from_slice(p.data());
    }
    Ok(out)
}

fn accuracy(probs: &[f64], labels: &[f64]) -> f64 {
    let hits = probs
        .iter()
        .zip(labels)
        .filter(|(p, y)| (**p >= 0.5) == (**y >= 0.5))
        .count();
    hits as f64 / labels.len() as f64
}

/// Mean BCE and accuracy at 0.5 in infer mode.
pub fn evaluate_loss(model: &mut ModelGraph, data: &EncodedDataset) -> Result<(f64, f64), TrainingError> {
    let probs = predict(model, data)?;
    let n = probs.len();
    let p = crate::nn::Tensor::from_vec(vec![n, 1], probs.clone())?;
    let y = crate::nn::Tensor::from_vec(vec![n, 1], data.labels().to_vec())?;
    let loss = bce_per_sample(&p, &y)?.iter().sum::<f64>() / n as f64;
    Ok((loss, accuracy(&probs, data.labels())))
}

pub fn evaluate(
    model: &mut ModelGraph,
    data: &EncodedDataset,
    threshold: f64,
) -> Result<MetricsReport, TrainingError> {
    let probs = predict(model, data)?;
    Ok(MetricsReport::from_scores(&probs, data.labels(), threshold))
}

/// One pass over `data` in shuffled mini-batches; returns the mean train-mode
/// loss and accuracy of the batches as they were seen.
fn run_epoch(
    model: &mut ModelGraph,
    opt: &mut Adam,
    data: &EncodedDataset,
    batch_size: usize,
    lr: f64,
    shuffle_seed: u64,
    epoch: usize,
) -> Result<(f64, f64), TrainingError> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut seeded(shuffle_seed));
    let mut loss_sum = 0.0;
    let mut hits = 0usize;
    for rows in order.chunks(batch_size) {
        let (a, b, y) = data.batch(rows);
        let p = model.forward_pair(&a, &b, Mode::Train)?;
        let (loss, grad) = bce_loss(&p, &y)?;
        if !loss.is_finite() {
            return Err(TrainingError::NonFinite { epoch });
        }
        loss_sum += loss * rows.len() as f64;
        hits += p
            .data()
            .iter()
            .zip(y.data())
            .filter(|(p, y)| (**p >= 0.5) == (**y >= 0.5))
            .count();
        model.backward_pair(&grad)?;
        opt.step(&mut model.params_mut(), lr)?;
    }
    let n = data.len() as f64;
    Ok((loss_sum / n, hits as f64 / n))
}

/// Trains for `config.max_epochs` epochs, validating after each in infer mode
/// and keeping the weights of every new validation-loss minimum.
pub fn train(
    model: ModelGraph,
    train_set: &EncodedDataset,
    val_set: &EncodedDataset,
    config: &TrainingConfig,
) -> Result<TrainOutcome, TrainingError> {
    train_with(model, train_set, val_set, config, |_| {})
}

pub fn train_with(
    mut model: ModelGraph,
    train_set: &EncodedDataset,
    val_set: &EncodedDataset,
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome, TrainingError> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(TrainingError::EmptyDataset);
    }
    if config.max_epochs == 0 {
        return Err(TrainingError::InvalidConfig("max_epochs must be at least 1".into()));
    }
    let mut opt = Adam::new();
    let mut scheduler = config.scheduler();
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, Checkpoint)> = None;
    for epoch in 1..=config.max_epochs {
        let lr = scheduler.lr();
        let seed = derive_seed(config.seed, EPOCH_STREAM + epoch as u64);
        let (train_loss, train_acc) =
            run_epoch(&mut model, &mut opt, train_set, config.batch_size, lr, seed, epoch)?;
        let (val_loss, val_acc) = evaluate_loss(&mut model, val_set)?;
        if !val_loss.is_finite() {
            return Err(TrainingError::NonFinite { epoch });
        }
        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((
                val_loss,
                Checkpoint {
                    model: model.clone(),
                    epoch,
                    training: Some(config.clone()),
                },
            ));
            log.best_epoch = Some(epoch);
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_loss: Some(val_loss),
            val_acc: Some(val_acc),
            lr,
        };
        on_epoch(&record);
        log.epochs.push(record);
        scheduler.observe(val_loss);
    }
    let (_, best) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        log,
        best,
        last: model,
    })
}

/// Fresh model trained for exactly `epochs` epochs on `merged`, without
/// validation. Epoch `e` uses `lr_schedule[e - 1]`, the rate logged by the
/// run that chose `epochs`; missing entries repeat the last rate (or the
/// initial rate when the schedule is empty).
pub fn retrain_final(
    model_config: &ModelConfig,
    merged: &EncodedDataset,
    epochs: usize,
    config: &TrainingConfig,
    lr_schedule: &[f64],
) -> Result<Checkpoint, TrainingError> {
    retrain_final_with(model_config, merged, epochs, config, lr_schedule, |_| {})
}

pub fn retrain_final_with(
    model_config: &ModelConfig,
    merged: &EncodedDataset,
    epochs: usize,
    config: &TrainingConfig,
    lr_schedule: &[f64],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Checkpoint, TrainingError> {
    config.validate()?;
    if merged.is_empty() {
        return Err(TrainingError::EmptyDataset);
    }
    let mut model = build_model(model_config, config.seed)?;
    let mut opt = Adam::new();
    for epoch in 1..=epochs {
        let lr = lr_schedule
            .get(epoch - 1)
            .or(lr_schedule.last())
            .copied()
            .unwrap_or(config.initial_lr);
        let seed = derive_seed(config.seed, EPOCH_STREAM + epoch as u64);
        let (train_loss, train_acc) =
            run_epoch(&mut model, &mut opt, merged, config.batch_size, lr, seed, epoch)?;
        on_epoch(&EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_loss: None,
            val_acc: None,
            lr,
        });
    }
    Ok(Checkpoint {
        model,
        epoch: epochs,
        training: Some(config.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainingConfig::default().validate().unwrap();
        let bad = TrainingConfig {
            lr_floor: 0.01,
            ..TrainingConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainingConfig {
            batch_size: 0,
            ..TrainingConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn log_csv_round_trip() {
        let log = TrainingLog {
            epochs: vec![
                EpochRecord { epoch: 1, train_loss: 0.7, train_acc: 0.5, val_loss: Some(0.69), val_acc: Some(0.52), lr: 0.001 },
                EpochRecord { epoch: 2, train_loss: 0.6, train_acc: 0.6, val_loss: Some(0.65), val_acc: Some(0.6), lr: 0.001 },
                EpochRecord { epoch: 3, train_loss: 0.5, train_acc: 0.7, val_loss: Some(0.66), val_acc: Some(0.58), lr: 0.0009 },
            ],
            best_epoch: Some(2),
        };
        let csv = log.to_csv();
        assert!(csv.starts_with(LOG_HEADER));
        assert_eq!(TrainingLog::from_csv(&csv).unwrap(), log);
    }
}
