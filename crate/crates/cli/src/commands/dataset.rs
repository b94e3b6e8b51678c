use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use sppi_core::dataset::*;
use sppi_core::rng::derive_seed;
use sppi_core::seq_encoding::{ProteinRecord, MAX_LEN};

use crate::error::{CliError, EXIT_DATA};
use crate::manifest::{read_json, write_json, write_text, Manifest};
use crate::settings::{existing_dir, existing_file, output_dir, require, resolve};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BuildDatasetArgs {
    /// Interaction pairs, TSV: id_a seq_a id_b seq_b label.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Protein pool for negative sampling, TSV (id, sequence) or FASTA.
    #[arg(long)]
    pub proteins: Option<PathBuf>,
    /// regular or strict.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Negatives to sample; defaults to the positive surplus.
    #[arg(long)]
    pub negatives_count: Option<usize>,
    /// Pairs with a longer chain are dropped.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Validation share (and, for regular splits, test share).
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Add mirror couples to every set (default).
    #[arg(long, num_args = 0, default_missing_value = "true", conflicts_with = "no_mirror")]
    pub mirror: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    pub no_mirror: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AuditArgs {
    /// Directory written by build-dataset.
    pub split_dir: Option<PathBuf>,
    /// Overrides the split kind recorded in the manifest.
    #[arg(long)]
    pub mode: Option<String>,
    /// Exit with status 3 when the split leaks.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub fail_on_leak: Option<bool>,
    /// Report directory; defaults to the split directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn parse_mode(mode: &str) -> Result<SplitKind, CliError> {
    mode.parse().map_err(CliError::usage)
}

fn set_path(dir: &Path, name: SetName) -> PathBuf {
    dir.join(format!("{}.tsv", name.as_str()))
}

/// Negatives not yet present as couples in `corpus`, drawn in rounds until
/// `count` distinct ones are found.
fn fresh_negatives(
    corpus: &InteractionCorpus,
    pool: &[ProteinRecord],
    count: usize,
    seed: u64,
) -> Result<Vec<InteractionPair>, CliError> {
    let positives = InteractionCorpus::new(corpus.pairs.iter().filter(|p| p.label).cloned().collect(), "");
    let mut taken: HashSet<CoupleKey> = corpus.couples().into_iter().collect();
    let mut out = Vec::with_capacity(count);
    for round in 0..32 {
        let short = count - out.len();
        if short == 0 {
            break;
        }
        let drawn = sample_negatives(&positives, pool, short, derive_seed(seed, round))?;
        for p in drawn.pairs {
            if taken.insert(p.couple()) {
                out.push(p);
            }
        }
    }
    if out.len() < count {
        return Err(CliError::data(format!(
            "could only sample {} of {count} new negatives from {} proteins",
            out.len(),
            pool.len()
        )));
    }
    Ok(out)
}

fn write_discards(path: &Path, discards: &[Discard]) -> Result<(), CliError> {
    let mut s = String::from("#id_a\tseq_a\tid_b\tseq_b\tlabel\tset\treason\n");
    for d in discards {
        let p = &d.pair;
        let set = d.set.map_or("-", |s| s.as_str());
        let reason = serde_json::to_value(d.reason).ok();
        let reason = reason.as_ref().and_then(|v| v.as_str()).unwrap_or("-");
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{set}\t{reason}",
            p.a.id,
            p.a.sequence,
            p.b.id,
            p.b.sequence,
            u8::from(p.label)
        );
    }
    write_text(path, &s)
}

fn set_summary(split: &DatasetSplit) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    for name in SetName::ALL {
        let s = split.set(name);
        m.insert(
            name.as_str().into(),
            json!({"pairs": s.len(), "positives": s.positives(), "negatives": s.negatives(), "balance": s.balance()}),
        );
    }
    m.into()
}

pub fn build_dataset(args: &BuildDatasetArgs) -> Result<(), CliError> {
    let mut flags = args.clone();
    if flags.no_mirror {
        flags.mirror = Some(false);
    }
    let s = resolve(&flags, args.config.as_deref())?;
    crate::set_threads(s.threads)?;
    let pairs_path = require(&s.pairs, "pairs")?.clone();
    existing_file(&pairs_path)?;
    if let Some(p) = &s.proteins {
        existing_file(p)?;
    }
    let kind = parse_mode(require(&s.mode, "mode")?)?;
    let out = require(&s.out, "out")?.clone();
    let seed = s.seed.unwrap_or(0);
    let max_len = s.max_len.unwrap_or(MAX_LEN);
    let val_fraction = s.val_fraction.unwrap_or(0.1);
    let mirror = s.mirror.unwrap_or(true);
    output_dir(&out)?;
    let mut manifest = Manifest::new("build-dataset", &s);
    manifest.input(&pairs_path);

    let ingest = read_pairs_file(&pairs_path)?;
    if !ingest.rejections.is_empty() {
        eprintln!("{}: {} rows rejected", pairs_path.display(), ingest.rejections.len());
        for r in ingest.rejections.iter().take(10) {
            eprintln!("  line {}: {}", r.line, r.reason);
        }
    }
    let mut rejections = String::from("#line\treason\n");
    for r in &ingest.rejections {
        let _ = writeln!(rejections, "{}\t{}", r.line, r.reason);
    }
    let rejections_path = out.join("rejections.tsv");
    write_text(&rejections_path, &rejections)?;
    manifest.output(&rejections_path);
    let read = ingest.corpus.len();
    let mut corpus = filter_by_length(&ingest.corpus, max_len);
    let too_long = read - corpus.len();

    let mut pool = match &s.proteins {
        Some(p) => {
            manifest.input(p);
            read_proteins_file(p)?
        }
        None => Vec::new(),
    };
    pool.extend(corpus.proteins());
    pool.retain(|p| p.len() <= max_len);
    let wanted = s
        .negatives_count
        .unwrap_or_else(|| corpus.positives().saturating_sub(corpus.negatives()));
    let sampled = if wanted > 0 {
        let negatives = fresh_negatives(&corpus, &pool, wanted, derive_seed(seed, 1))?;
        let n = negatives.len();
        corpus.extend(InteractionCorpus::new(negatives, "sampled negatives"));
        n
    } else {
        0
    };
    let (balanced, balance_discards) = balance_corpus(&corpus, derive_seed(seed, 2));
    if balanced.is_empty() {
        return Err(CliError::data("no balanced corpus left to split"));
    }
    let split_seed = derive_seed(seed, 3);
    let mut split = match kind {
        SplitKind::Regular => {
            let ratios = SplitRatios::new(1.0 - 2.0 * val_fraction, val_fraction, val_fraction)?;
            split_regular(&balanced, ratios, split_seed)?
        }
        SplitKind::Strict => split_strict(&balanced, val_fraction, split_seed)?,
    };
    let before_mirror = set_summary(&split);
    if mirror {
        split = augment_mirrors(&split)?;
    }
    split.discarded.splice(
        0..0,
        balance_discards.iter().cloned(),
    );
    let report = audit_split(&split);

    for name in SetName::ALL {
        let path = set_path(&out, name);
        write_pairs_file(split.set(name), &path)?;
        manifest.output(&path);
    }
    let discard_path = out.join("discarded.tsv");
    write_discards(&discard_path, &split.discarded)?;
    manifest.output(&discard_path);

    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for d in &split.discarded {
        let key = serde_json::to_value(d.reason).ok().and_then(|v| v.as_str().map(String::from));
        *reasons.entry(key.unwrap_or_default()).or_default() += 1;
    }
    manifest.result("mode", kind);
    manifest.result("augmented", split.augmented);
    manifest.result("seed", seed);
    manifest.result("max_len", max_len);
    manifest.result("val_fraction", val_fraction);
    manifest.result(
        "ingest",
        json!({"pairs_read": read, "rejected": ingest.rejections.len(), "longer_than_max_len": too_long}),
    );
    manifest.result("negatives_sampled", sampled);
    manifest.result("corpus_after_balancing", balanced.len());
    manifest.result("discarded", &reasons);
    manifest.result("sets_before_mirroring", before_mirror);
    manifest.result("sets", set_summary(&split));
    manifest.result("audit", &report);
    manifest.write(&out.join(MANIFEST))?;

    let [tr, va, te] = split.sizes();
    eprintln!(
        "{kind} split: train {tr}, validation {va}, test {te}; {} discarded; mirrored: {}",
        split.discarded.len(),
        split.augmented
    );
    eprintln!(
        "couple overlap {}, strictness violations {}",
        report.couple_overlap.total(),
        report
            .strictness_violations
            .map_or("n/a".to_string(), |v| v.to_string())
    );
    Ok(())
}

pub struct LoadedSplit {
    pub split: DatasetSplit,
    pub max_len: Option<usize>,
    pub files: Vec<PathBuf>,
}

pub fn load_split(dir: &Path, mode: Option<SplitKind>) -> Result<LoadedSplit, CliError> {
    existing_dir(dir)?;
    let mut sets = Vec::new();
    let mut files = Vec::new();
    for name in SetName::ALL {
        let path = set_path(dir, name);
        existing_file(&path)?;
        let report = read_pairs_file(&path)?;
        if let Some(r) = report.rejections.first() {
            return Err(CliError::data(format!(
                "{}: {} invalid rows, first at line {}: {}",
                path.display(),
                report.rejections.len(),
                r.line,
                r.reason
            )));
        }
        sets.push(report.corpus);
        files.push(path);
    }
    let manifest_path = dir.join(MANIFEST);
    let results = if manifest_path.is_file() {
        files.push(manifest_path.clone());
        read_json(&manifest_path)?["results"].clone()
    } else {
        serde_json::Value::Null
    };
    let kind = match (mode, results["mode"].as_str()) {
        (Some(k), _) => k,
        (None, Some(m)) => parse_mode(m)?,
        (None, None) => SplitKind::Regular,
    };
    let test = sets.pop().expect("three sets");
    let validation = sets.pop().expect("three sets");
    let train = sets.pop().expect("three sets");
    Ok(LoadedSplit {
        split: DatasetSplit {
            train,
            validation,
            test,
            kind,
            augmented: results["augmented"].as_bool().unwrap_or(false),
            discarded: Vec::new(),
        },
        max_len: results["max_len"].as_u64().map(|v| v as usize),
        files,
    })
}

pub fn audit(args: &AuditArgs) -> Result<(), CliError> {
    let s = resolve(args, args.config.as_deref())?;
    crate::set_threads(s.threads)?;
    let dir = require(&s.split_dir, "split-dir")?.clone();
    let mode = s.mode.as_deref().map(parse_mode).transpose()?;
    let loaded = load_split(&dir, mode)?;
    let out = s.out.clone().unwrap_or_else(|| dir.clone());
    output_dir(&out)?;
    let report = audit_split(&loaded.split);
    eprint!("{}", report.to_text());
    let report_path = out.join("audit.json");
    write_json(&report_path, &report)?;
    let mut manifest = Manifest::new("audit", &s);
    for f in &loaded.files {
        manifest.input(f);
    }
    manifest.output(&report_path);
    manifest.result("clean", report.is_clean());
    manifest.write(&out.join("audit.manifest.json"))?;
    if s.fail_on_leak.unwrap_or(false) && !report.is_clean() {
        return Err(CliError::new(EXIT_DATA, "split leaks: see couple_overlap / strictness_violations"));
    }
    Ok(())
}
