//! Binary checkpoint format, all integers little-endian:
//!
//! ```text
//! "SPPI"  u32 version  u8 model-kind tag
//! u32 n   n bytes of JSON: {"model": .., "training": .., "epoch": ..}
//! u32 tensor count, then per tensor:
//!     u32 n  n bytes of name  u8 ndim  ndim x u64 dims  prod(dims) x f64
//! u32 CRC-32 of every preceding byte
//! ```
//!
//! Batch-norm moving statistics are stored only once they have been
//! estimated; a loaded layer is ready for inference exactly when they are present.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trainer::{Checkpoint, TrainingConfig};
use crate::models::{build_model, ModelConfig, ModelKind};
use crate::nn::Tensor;

pub const MAGIC: &[u8; 4] = b"SPPI";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckpointError {
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error("checkpoint format version {found}, this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint holds a {found} model, expected {expected}")]
    ModelKindMismatch { expected: ModelKind, found: ModelKind },
    #[error("corrupt checkpoint: {0}")]
    CorruptFile(String),
}

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    training: Option<TrainingConfig>,
    epoch: usize,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u32(out, b.len() as u32);
    out.extend_from_slice(b);
}

pub fn to_bytes(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    out.push(ckpt.model.kind().tag());
    let header = Header {
        model: ckpt.model.config().clone(),
        training: ckpt.training.clone(),
        epoch: ckpt.epoch,
    };
    put_bytes(&mut out, &serde_json::to_vec(&header).expect("header serializes"));
    let pending: std::collections::HashSet<String> = ckpt
        .model
        .batch_norms()
        .iter()
        .filter(|bn| !bn.stats_ready)
        .flat_map(|bn| [bn.moving_mean.name.clone(), bn.moving_var.name.clone()])
        .collect();
    let params: Vec<_> = ckpt
        .model
        .params()
        .into_iter()
        .filter(|p| !pending.contains(&p.name))
        .collect();
    put_u32(&mut out, params.len() as u32);
    for p in params {
        put_bytes(&mut out, p.name.as_bytes());
        let shape = p.value.shape();
        out.push(shape.len() as u8);
        for &d in shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in p.value.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| CheckpointError::CorruptFile("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bytes(&mut self) -> Result<&'a [u8], CheckpointError> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let corrupt = |m: &str| CheckpointError::CorruptFile(m.to_string());
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(corrupt("missing SPPI magic"));
    }
    if bytes.len() < 13 {
        return Err(corrupt("file too short"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(corrupt("checksum mismatch"));
    }
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let tag = r.u8()?;
    let kind = ModelKind::from_tag(tag).ok_or_else(|| corrupt("unknown model-kind tag"))?;
    let header: Header =
        serde_json::from_slice(r.bytes()?).map_err(|e| CheckpointError::CorruptFile(format!("header: {e}")))?;
    if header.model.kind() != kind {
        return Err(corrupt("model-kind tag disagrees with the header"));
    }
    let count = r.u32()? as usize;
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let name = String::from_utf8(r.bytes()?.to_vec()).map_err(|_| corrupt("tensor name is not UTF-8"))?;
        let ndim = r.u8()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u64()? as usize);
        }
        let len: usize = shape.iter().product();
        let raw = r.take(len.checked_mul(8).ok_or_else(|| corrupt("tensor too large"))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::from_vec(shape, data).map_err(|e| CheckpointError::CorruptFile(e.to_string()))?;
        tensors.insert(name, t);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes after tensors"));
    }
    let mut model = build_model(&header.model, 0)
        .map_err(|e| CheckpointError::CorruptFile(format!("model config: {e}")))?;
    let ready: Vec<bool> = model
        .batch_norms()
        .iter()
        .map(|bn| tensors.contains_key(&bn.moving_mean.name) && tensors.contains_key(&bn.moving_var.name))
        .collect();
    for bn in model.batch_norms_mut().into_iter().zip(&ready) {
        bn.0.stats_ready = *bn.1;
    }
    let mut used = 0;
    for p in model.params_mut() {
        match tensors.get(&p.name) {
            Some(t) if t.shape() == p.value.shape() => {
                p.value = t.clone();
                used += 1;
            }
            Some(t) => {
                return Err(CheckpointError::CorruptFile(format!(
                    "{} has shape {:?}, model expects {:?}",
                    p.name,
                    t.shape(),
                    p.value.shape()
                )))
            }
            None if p.trainable => {
                return Err(CheckpointError::CorruptFile(format!("missing tensor {}", p.name)))
            }
            None => {}
        }
    }
    if used != tensors.len() {
        return Err(corrupt("checkpoint holds tensors the model does not have"));
    }
    Ok(Checkpoint {
        model,
        epoch: header.epoch,
        training: header.training,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, to_bytes(ckpt))
        .map_err(|e| CheckpointError::IoFailure(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes =
        std::fs::read(path).map_err(|e| CheckpointError::IoFailure(format!("{}: {e}", path.display())))?;
    from_bytes(&bytes)
}

/// Loads and checks the model kind.
pub fn load_checkpoint_as(path: &Path, expected: ModelKind) -> Result<Checkpoint, CheckpointError> {
    let ckpt = load_checkpoint(path)?;
    let found = ckpt.model.kind();
    if found != expected {
        return Err(CheckpointError::ModelKindMismatch { expected, found });
    }
    Ok(ckpt)
}
