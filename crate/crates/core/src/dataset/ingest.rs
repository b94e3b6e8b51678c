use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{DatasetError, InteractionCorpus, InteractionPair};
use crate::seq_encoding::{EncodingError, ProteinRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectReason {
    MalformedRow { columns: usize },
    IllegalLabel { value: String },
    InvalidSequence { slot: char, id: String, message: String },
    /// The same id was seen earlier with a different sequence.
    InconsistentSequence { id: String },
    DuplicatePair,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::MalformedRow { columns } => {
                write!(f, "MalformedRow: expected 5 tab-separated columns, found {columns}")
            }
            RejectReason::IllegalLabel { value } => write!(f, "IllegalLabel: {value:?}"),
            RejectReason::InvalidSequence { slot, id, message } => {
                write!(f, "InvalidSequence ({slot}, {id}): {message}")
            }
            RejectReason::InconsistentSequence { id } => {
                write!(f, "InconsistentSequence: {id} already seen with another chain")
            }
            RejectReason::DuplicatePair => f.write_str("DuplicatePair"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    /// 1-based line number in the source.
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub corpus: InteractionCorpus,
    pub rejections: Vec<Rejection>,
}

fn record(id: &str, seq: &str, slot: char) -> Result<ProteinRecord, RejectReason> {
    ProteinRecord::new(id, seq).map_err(|e: EncodingError| RejectReason::InvalidSequence {
        slot,
        id: id.to_string(),
        message: e.to_string(),
    })
}

/// Reads `id_a  seq_a  id_b  seq_b  label` rows. Blank lines and lines
/// starting with `#` are skipped; bad rows are collected, not fatal.
pub fn ingest_pairs<R: BufRead>(source: R, provenance: &str) -> Result<IngestReport, DatasetError> {
    let mut pairs = Vec::new();
    let mut rejections = Vec::new();
    let mut seen = HashSet::<(String, String, bool)>::new();
    let mut chains = HashMap::<String, String>::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        let mut reject = |reason| rejections.push(Rejection { line: line_no, reason });
        if cols.len() != 5 {
            reject(RejectReason::MalformedRow { columns: cols.len() });
            continue;
        }
        let label = match cols[4] {
            "1" => true,
            "0" => false,
            other => {
                reject(RejectReason::IllegalLabel { value: other.to_string() });
                continue;
            }
        };
        let a = match record(cols[0], cols[1], 'a') {
            Ok(r) => r,
            Err(e) => {
                reject(e);
                continue;
            }
        };
        let b = match record(cols[2], cols[3], 'b') {
            Ok(r) => r,
            Err(e) => {
                reject(e);
                continue;
            }
        };
        let inconsistent = [&a, &b]
            .into_iter()
            .find(|r| chains.get(&r.id).is_some_and(|s| *s != r.sequence));
        if let Some(r) = inconsistent {
            reject(RejectReason::InconsistentSequence { id: r.id.clone() });
            continue;
        }
        if !seen.insert((a.id.clone(), b.id.clone(), label)) {
            reject(RejectReason::DuplicatePair);
            continue;
        }
        for r in [&a, &b] {
            chains.entry(r.id.clone()).or_insert_with(|| r.sequence.clone());
        }
        pairs.push(InteractionPair::new(a, b, label));
    }
    Ok(IngestReport {
        corpus: InteractionCorpus::new(pairs, provenance),
        rejections,
    })
}

pub fn read_pairs_file(path: &Path) -> Result<IngestReport, DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    ingest_pairs(BufReader::new(file), &path.display().to_string())
}

pub fn write_pairs<W: Write>(corpus: &InteractionCorpus, mut out: W) -> std::io::Result<()> {
    writeln!(out, "#id_a\tseq_a\tid_b\tseq_b\tlabel")?;
    for p in &corpus.pairs {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.a.id,
            p.a.sequence,
            p.b.id,
            p.b.sequence,
            u8::from(p.label)
        )?;
    }
    out.flush()
}

pub fn write_pairs_file(corpus: &InteractionCorpus, path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    write_pairs(corpus, BufWriter::new(file))?;
    Ok(())
}

/// Protein list as `id<TAB>sequence` lines, or FASTA when the first
/// non-blank line starts with `>`. Later entries with an already seen id are
/// ignored.
pub fn read_proteins<R: BufRead>(source: R) -> Result<Vec<ProteinRecord>, DatasetError> {
    let lines: Vec<String> = source.lines().collect::<Result<_, _>>()?;
    let fasta = lines
        .iter()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.starts_with('>'));
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    if fasta {
        for (i, line) in lines.iter().enumerate() {
            let line = line.trim();
            if let Some(header) = line.strip_prefix('>') {
                let id = header.split_whitespace().next().unwrap_or("").to_string();
                if id.is_empty() {
                    return Err(DatasetError::Parse {
                        line: i + 1,
                        message: "FASTA header without an id".into(),
                    });
                }
                entries.push((i + 1, id, String::new()));
            } else if !line.is_empty() {
                match entries.last_mut() {
                    Some(e) => e.2.push_str(line),
                    None => unreachable!("first non-blank line is a header"),
                }
            }
        }
    } else {
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(DatasetError::Parse {
                    line: i + 1,
                    message: format!("expected id<TAB>sequence, found {} columns", cols.len()),
                });
            }
            entries.push((i + 1, cols[0].to_string(), cols[1].to_string()));
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, id, seq) in entries {
        if !seen.insert(id.clone()) {
            continue;
        }
        let rec = ProteinRecord::new(id, &seq).map_err(|e| DatasetError::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_proteins_file(path: &Path) -> Result<Vec<ProteinRecord>, DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    read_proteins(BufReader::new(file))
}

/// Keeps the pairs whose two chains are at most `max_len` residues long.
pub fn filter_by_length(corpus: &InteractionCorpus, max_len: usize) -> InteractionCorpus {
    InteractionCorpus::new(
        corpus
            .pairs
            .iter()
            .filter(|p| p.a.len() <= max_len && p.b.len() <= max_len)
            .cloned()
            .collect(),
        corpus.provenance.clone(),
    )
}
