use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use sppi_core::dataset::write_pairs_file;
use sppi_core::synthetic::{motif_corpus, toy_corpus, MotifCorpusConfig, ToyCorpusConfig};

use crate::error::CliError;
use crate::manifest::{write_text, Manifest};
use crate::settings::{output_dir, require, resolve};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SynthArgs {
    /// toy (heavy-tailed interaction graph) or motif (planted motif rule).
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Protein count of the toy corpus.
    #[arg(long)]
    pub proteins: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Writes `pairs.tsv` and `proteins.tsv` for a generated corpus.
pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let s = resolve(args, args.config.as_deref())?;
    let out = require(&s.out, "out")?.clone();
    let seed = s.seed.unwrap_or(0);
    let (corpus, proteins) = match require(&s.kind, "kind")?.as_str() {
        "toy" => {
            let d = ToyCorpusConfig::default();
            toy_corpus(&ToyCorpusConfig {
                pairs: s.pairs.unwrap_or(d.pairs),
                proteins: s.proteins.unwrap_or(d.proteins),
                seed,
                ..d
            })
        }
        "motif" => {
            let d = MotifCorpusConfig::default();
            let c = motif_corpus(&MotifCorpusConfig {
                pairs: s.pairs.unwrap_or(d.pairs),
                seed,
                ..d
            });
            let proteins = c.proteins();
            (c, proteins)
        }
        other => return Err(CliError::usage(format!("unknown corpus kind {other:?} (expected toy or motif)"))),
    };
    output_dir(&out)?;
    let pairs_path = out.join("pairs.tsv");
    write_pairs_file(&corpus, &pairs_path)?;
    let mut text = String::from("#id\tsequence\n");
    for p in &proteins {
        let _ = writeln!(text, "{}\t{}", p.id, p.sequence);
    }
    let proteins_path = out.join("proteins.tsv");
    write_text(&proteins_path, &text)?;
    let mut manifest = Manifest::new("synth", &s);
    manifest.output(&pairs_path);
    manifest.output(&proteins_path);
    manifest.result("pairs", corpus.len());
    manifest.result("proteins", proteins.len());
    manifest.write(&out.join("manifest.json"))?;
    eprintln!("wrote {} pairs over {} proteins to {}", corpus.len(), proteins.len(), out.display());
    Ok(())
}
