use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use sppi_core::dataset::{InteractionCorpus, InteractionPair};
use sppi_core::models::{build_model, FcConfig, ModelConfig, ModelKind, RecurrentConfig};
use sppi_core::seq_encoding::{ProteinRecord, MAX_LEN};
use sppi_core::training::*;

use super::dataset::{load_split, MANIFEST};
use crate::error::CliError;
use crate::manifest::{write_json, write_text, Manifest};
use crate::settings::{existing_file, output_dir, require, resolve};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TrainArgs {
    /// Directory written by build-dataset.
    pub split_dir: Option<PathBuf>,
    /// fc or recurrent.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_factor: Option<f64>,
    #[arg(long)]
    pub lr_floor: Option<f64>,
    /// Epochs without a new best validation loss before the rate drops.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Padded input length; defaults to the split's filter length.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Recurrent model only.
    #[arg(long)]
    pub kernel_size: Option<usize>,
    /// Recurrent model only.
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Labelled pairs TSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Expected model kind; a different checkpoint exits with status 4.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Also write a threshold sweep with this many steps.
    #[arg(long)]
    pub sweep_steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Pairs TSV: id_a seq_a id_b seq_b [label].
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExportCurvesArgs {
    /// Training log CSV written by train or final-test.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn parse_model(s: &str) -> Result<ModelKind, CliError> {
    s.parse().map_err(CliError::usage)
}

fn model_config(s: &TrainArgs, max_len: usize) -> Result<ModelConfig, CliError> {
    let kind = parse_model(require(&s.model, "model")?)?;
    let cfg = match kind {
        ModelKind::FullyConnected => {
            if s.kernel_size.is_some() || s.pool_size.is_some() {
                return Err(CliError::usage("--kernel-size and --pool-size apply to the recurrent model only"));
            }
            ModelConfig::FullyConnected(FcConfig::with_max_len(max_len))
        }
        ModelKind::Recurrent => {
            let mut cfg = if max_len == MAX_LEN {
                RecurrentConfig::default()
            } else {
                RecurrentConfig::scaled(max_len)?
            };
            cfg.kernel_size = s.kernel_size.unwrap_or(cfg.kernel_size);
            cfg.pool_size = s.pool_size.unwrap_or(cfg.pool_size);
            cfg.shape_chain()?;
            ModelConfig::Recurrent(cfg)
        }
    };
    Ok(cfg)
}

fn training_config(s: &TrainArgs) -> Result<TrainingConfig, CliError> {
    let d = TrainingConfig::default();
    let initial_lr = s.lr.unwrap_or(d.initial_lr);
    let cfg = TrainingConfig {
        batch_size: s.batch_size.unwrap_or(d.batch_size),
        initial_lr,
        plateau_patience: s.patience.unwrap_or(d.plateau_patience),
        lr_factor: s.lr_factor.unwrap_or(d.lr_factor),
        lr_floor: s.lr_floor.unwrap_or(d.lr_floor.min(initial_lr)),
        max_epochs: s.epochs.unwrap_or(d.max_epochs),
        seed: s.seed.unwrap_or(d.seed),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn print_epoch(total: usize) -> impl FnMut(&EpochRecord) {
    move |r| {
        let mut line = format!(
            "epoch {}/{total}  loss {:.6}  acc {:.4}",
            r.epoch, r.train_loss, r.train_acc
        );
        if let (Some(l), Some(a)) = (r.val_loss, r.val_acc) {
            let _ = write!(line, "  val_loss {l:.6}  val_acc {a:.4}");
        }
        let _ = write!(line, "  lr {}", r.lr);
        eprintln!("{line}");
    }
}

struct Prepared {
    settings: TrainArgs,
    out: PathBuf,
    model: ModelConfig,
    training: TrainingConfig,
    split: sppi_core::dataset::DatasetSplit,
    files: Vec<PathBuf>,
    train: EncodedDataset,
    validation: EncodedDataset,
}

fn prepare(args: &TrainArgs) -> Result<Prepared, CliError> {
    let s = resolve(args, args.config.as_deref())?;
    crate::set_threads(s.threads)?;
    let dir = require(&s.split_dir, "split-dir")?.clone();
    let out = require(&s.out, "out")?.clone();
    let loaded = load_split(&dir, None)?;
    let max_len = s.max_len.or(loaded.max_len).unwrap_or(MAX_LEN);
    let model = model_config(&s, max_len)?;
    let training = training_config(&s)?;
    output_dir(&out)?;
    let train = EncodedDataset::from_corpus(&loaded.split.train, max_len)?;
    let validation = EncodedDataset::from_corpus(&loaded.split.validation, max_len)?;
    Ok(Prepared {
        settings: s,
        out,
        model,
        training,
        split: loaded.split,
        files: loaded.files,
        train,
        validation,
    })
}

fn record_inputs(manifest: &mut Manifest, p: &Prepared) {
    for f in &p.files {
        manifest.input(f);
    }
    manifest.result("model", &p.model);
    manifest.result("training", &p.training);
}

pub fn train_cmd(args: &TrainArgs) -> Result<(), CliError> {
    let p = prepare(args)?;
    let model = build_model(&p.model, p.training.seed)?;
    eprintln!(
        "training {} model ({} parameters) on {} pairs, validating on {}",
        model.kind(),
        model.param_count(),
        p.train.len(),
        p.validation.len()
    );
    let outcome = train_with(model, &p.train, &p.validation, &p.training, print_epoch(p.training.max_epochs))?;
    let mut manifest = Manifest::new("train", &p.settings);
    record_inputs(&mut manifest, &p);
    let log_path = p.out.join("log.csv");
    write_text(&log_path, &outcome.log.to_csv())?;
    let best_path = p.out.join("best.ckpt");
    save_checkpoint(&outcome.best, &best_path)?;
    let last_path = p.out.join("last.ckpt");
    save_checkpoint(
        &Checkpoint {
            model: outcome.last,
            epoch: p.training.max_epochs,
            training: Some(p.training.clone()),
        },
        &last_path,
    )?;
    for path in [&log_path, &best_path, &last_path] {
        manifest.output(path);
    }
    let best = outcome.log.best().cloned();
    manifest.result("best_epoch", outcome.log.best_epoch);
    manifest.result("best", best);
    manifest.write(&p.out.join(MANIFEST))?;
    if let Some(b) = best {
        eprintln!(
            "best epoch {}: val_loss {:.6} val_acc {:.4}",
            b.epoch,
            b.val_loss.unwrap_or(f64::NAN),
            b.val_acc.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

pub fn final_test(args: &TrainArgs) -> Result<(), CliError> {
    let p = prepare(args)?;
    let test = EncodedDataset::from_corpus(&p.split.test, p.model.max_len())?;
    let model = build_model(&p.model, p.training.seed)?;
    eprintln!("selecting the epoch count on train / validation");
    let outcome = train_with(model, &p.train, &p.validation, &p.training, print_epoch(p.training.max_epochs))?;
    let x = outcome.log.best_epoch.unwrap_or(0);
    let schedule: Vec<f64> = outcome.log.lr_schedule().into_iter().take(x).collect();
    eprintln!("retraining on train + validation for x = {x} epochs");
    let merged = p.train.merged(&p.validation);
    let mut retrain_log = TrainingLog::default();
    let final_ckpt = retrain_final_with(&p.model, &merged, x, &p.training, &schedule, |r| {
        print_epoch(x)(r);
        retrain_log.epochs.push(*r);
    })?;
    let mut final_model = final_ckpt.model.clone();
    let report = evaluate(&mut final_model, &test, DEFAULT_THRESHOLD)?;
    eprint!("{}", report.to_text());

    let mut manifest = Manifest::new("final-test", &p.settings);
    record_inputs(&mut manifest, &p);
    let outputs = [
        ("selection_log.csv", outcome.log.to_csv()),
        ("retrain_log.csv", retrain_log.to_csv()),
    ];
    for (name, text) in outputs {
        let path = p.out.join(name);
        write_text(&path, &text)?;
        manifest.output(&path);
    }
    let ckpt_path = p.out.join("final.ckpt");
    save_checkpoint(&final_ckpt, &ckpt_path)?;
    manifest.output(&ckpt_path);
    let mut metrics = report.to_json();
    if let Some(m) = metrics.as_object_mut() {
        m.insert("x".into(), json!(x));
        m.insert("threshold".into(), json!(DEFAULT_THRESHOLD));
        m.insert("split".into(), json!(p.split.kind));
        m.insert("model".into(), json!(p.model.kind()));
        m.insert("test_pairs".into(), json!(test.len()));
    }
    let metrics_path = p.out.join("metrics.json");
    write_json(&metrics_path, &metrics)?;
    manifest.output(&metrics_path);
    manifest.result("x", x);
    manifest.result("metrics", &metrics);
    manifest.write(&p.out.join(MANIFEST))?;
    Ok(())
}

fn load_for(checkpoint: &Path, model: Option<&str>) -> Result<Checkpoint, CliError> {
    existing_file(checkpoint)?;
    Ok(match model {
        Some(kind) => load_checkpoint_as(checkpoint, parse_model(kind)?)?,
        None => load_checkpoint(checkpoint)?,
    })
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<(), CliError> {
    let s = resolve(args, args.config.as_deref())?;
    crate::set_threads(s.threads)?;
    let ckpt_path = require(&s.checkpoint, "checkpoint")?.clone();
    let data_path = require(&s.data, "data")?.clone();
    let out = require(&s.out, "out")?.clone();
    existing_file(&data_path)?;
    let mut ckpt = load_for(&ckpt_path, s.model.as_deref())?;
    let ingest = sppi_core::dataset::read_pairs_file(&data_path)?;
    if let Some(r) = ingest.rejections.first() {
        return Err(CliError::data(format!("{}: line {}: {}", data_path.display(), r.line, r.reason)));
    }
    let data = EncodedDataset::from_corpus(&ingest.corpus, ckpt.model.max_len())?;
    output_dir(&out)?;
    let threshold = s.threshold.unwrap_or(DEFAULT_THRESHOLD);
    let probs = predict(&mut ckpt.model, &data)?;
    let report = MetricsReport::from_scores(&probs, data.labels(), threshold);
    eprint!("{}", report.to_text());
    let mut manifest = Manifest::new("evaluate", &s);
    manifest.input(&ckpt_path);
    manifest.input(&data_path);
    let mut metrics = report.to_json();
    if let Some(m) = metrics.as_object_mut() {
        m.insert("threshold".into(), json!(threshold));
        m.insert("pairs".into(), json!(data.len()));
    }
    let metrics_path = out.join("metrics.json");
    write_json(&metrics_path, &metrics)?;
    manifest.output(&metrics_path);
    if let Some(steps) = s.sweep_steps {
        let path = out.join("sweep.csv");
        write_text(&path, &sweep_csv(&threshold_sweep(&probs, data.labels(), steps.max(1))))?;
        manifest.output(&path);
    }
    manifest.result("metrics", &metrics);
    manifest.write(&out.join(MANIFEST))?;
    Ok(())
}

/// Rows of `id_a seq_a id_b seq_b [label]`; the label is optional here.
fn read_query_pairs(path: &Path) -> Result<Vec<(InteractionPair, Option<bool>)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: String| CliError::data(format!("{}: line {}: {m}", path.display(), i + 1));
        let cols: Vec<&str> = line.split('\t').collect();
        if !(4..=5).contains(&cols.len()) {
            return Err(bad(format!("expected 4 or 5 tab-separated columns, found {}", cols.len())));
        }
        let a = ProteinRecord::new(cols[0], cols[1]).map_err(|e| bad(e.to_string()))?;
        let b = ProteinRecord::new(cols[2], cols[3]).map_err(|e| bad(e.to_string()))?;
        let label = match cols.get(4).map(|s| s.trim()) {
            None => None,
            Some("1") => Some(true),
            Some("0") => Some(false),
            Some(other) => return Err(bad(format!("label {other:?} is not 0 or 1"))),
        };
        rows.push((InteractionPair::new(a, b, label.unwrap_or(false)), label));
    }
    Ok(rows)
}

pub fn predict_cmd(args: &PredictArgs) -> Result<(), CliError> {
    let s = resolve(args, args.config.as_deref())?;
    crate::set_threads(s.threads)?;
    let ckpt_path = require(&s.checkpoint, "checkpoint")?.clone();
    let pairs_path = require(&s.pairs, "pairs")?.clone();
    let out = require(&s.out, "out")?.clone();
    existing_file(&pairs_path)?;
    let mut ckpt = load_for(&ckpt_path, s.model.as_deref())?;
    let rows = read_query_pairs(&pairs_path)?;
    if rows.is_empty() {
        return Err(CliError::data(format!("{}: no pairs", pairs_path.display())));
    }
    let corpus = InteractionCorpus::new(rows.iter().map(|r| r.0.clone()).collect(), "");
    let data = EncodedDataset::from_corpus(&corpus, ckpt.model.max_len())?;
    output_dir(&out)?;
    let probs = predict(&mut ckpt.model, &data)?;
    let mut text = String::from("id_a\tid_b\tprobability\tlabel\n");
    for ((pair, label), p) in rows.iter().zip(&probs) {
        let label = label.map_or("-".to_string(), |l| u8::from(l).to_string());
        let _ = writeln!(text, "{}\t{}\t{p}\t{label}", pair.a.id, pair.b.id);
    }
    let pred_path = out.join("predictions.tsv");
    write_text(&pred_path, &text)?;
    let mut manifest = Manifest::new("predict", &s);
    manifest.input(&ckpt_path);
    manifest.input(&pairs_path);
    manifest.output(&pred_path);
    manifest.result("pairs", rows.len());
    manifest.write(&out.join(MANIFEST))?;
    eprintln!("wrote {} predictions to {}", rows.len(), pred_path.display());
    Ok(())
}

const GNUPLOT: &str = r#"set datafile separator ","
set terminal pngcairo size 1200,450
set output "curves.png"
set multiplot layout 1,2
set xlabel "epoch"
set title "loss"
plot "curves.csv" using 1:2 with lines title "train", "" using 1:3 with lines title "validation"
set title "accuracy"
plot "curves.csv" using 1:4 with lines title "train", "" using 1:5 with lines title "validation"
unset multiplot
"#;

pub fn export_curves(args: &ExportCurvesArgs) -> Result<(), CliError> {
    let s = resolve(args, args.config.as_deref())?;
    let log_path = require(&s.log, "log")?.clone();
    let out = require(&s.out, "out")?.clone();
    existing_file(&log_path)?;
    let text = std::fs::read_to_string(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    let log = TrainingLog::from_csv(&text).map_err(|e| CliError::data(format!("{}: {e}", log_path.display())))?;
    output_dir(&out)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut csv = String::from("epoch,train_loss,val_loss,train_acc,val_acc,lr\n");
    for r in &log.epochs {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            opt(r.val_loss),
            r.train_acc,
            opt(r.val_acc),
            r.lr
        );
    }
    let csv_path = out.join("curves.csv");
    write_text(&csv_path, &csv)?;
    let gp_path = out.join("curves.gp");
    write_text(&gp_path, GNUPLOT)?;
    let mut manifest = Manifest::new("export-curves", &s);
    manifest.input(&log_path);
    manifest.output(&csv_path);
    manifest.output(&gp_path);
    manifest.result("epochs", log.epochs.len());
    manifest.result("best_epoch", log.best_epoch);
    manifest.write(&out.join(MANIFEST))?;
    eprintln!("wrote {} (render with: gnuplot curves.gp)", csv_path.display());
    Ok(())
}
