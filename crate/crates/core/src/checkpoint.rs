//! Trained model file.
//!
//! ```text
//! offset  size   field
//! 0       10     magic "TGSC-MODEL"
//! 10      2      format version (u16)
//! 12      1      model kind (0 setmp, 1 combmp, 2 mpnn, 3 mlp_ae)
//! 13      4      hyperparameter record length L (u32)
//! 17      L      hyperparameter record (JSON)
//! ..      4      tensor count (u32)
//! per tensor, ascending by name:
//!         2      name length (u16), then the UTF-8 name
//!         1      rank r (u8), then r dimensions (u32)
//!         4 x n  values (f32, row-major)
//! ..      32     SHA-256 of every preceding byte
//! ```
//!
//! All integers and floats are little-endian. The model id carried by
//! compressed artifacts is the first 8 digest bytes read as a u64.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::harness::{ModelConfig, ModelKind};
use crate::ingestion::Normalization;
use crate::io::{read_file, write_atomic};

pub const CHECKPOINT_MAGIC: &[u8; 10] = b"TGSC-MODEL";
pub const CHECKPOINT_VERSION: u16 = 1;
const DIGEST_BYTES: usize = 32;

/// Hyperparameter record: enough to rebuild every network and to map raw
/// measurements in and out of normalized space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub links: Vec<String>,
    pub normalization: Normalization,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: ParamStore<f32>,
}

impl Checkpoint {
    pub fn kind(&self) -> ModelKind {
        self.meta.model.kind()
    }

    fn body(&self) -> Result<Vec<u8>> {
        let record = serde_json::to_vec(&self.meta)?;
        let mut out = Vec::with_capacity(64 + record.len() + 4 * self.params.num_scalars());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(self.kind().code());
        out.extend_from_slice(&u32_len(record.len(), "hyperparameter record")?.to_le_bytes());
        out.extend_from_slice(&record);
        out.extend_from_slice(&u32_len(self.params.len(), "tensor count")?.to_le_bytes());
        for (name, t) in self.params.iter() {
            let len = u16::try_from(name.len())
                .map_err(|_| Error::Format(format!("parameter name `{name}` is too long")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            let rank = u8::try_from(t.shape().len())
                .map_err(|_| Error::Format(format!("parameter `{name}` has too many dimensions")))?;
            out.push(rank);
            for &dim in t.shape() {
                out.extend_from_slice(&u32_len(dim, "tensor dimension")?.to_le_bytes());
            }
            for v in t.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = self.body()?;
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn digest(&self) -> Result<[u8; 32]> {
        Ok(Sha256::digest(self.body()?).into())
    }

    pub fn model_id(&self) -> Result<u64> {
        Ok(model_id(&self.digest()?))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = CHECKPOINT_MAGIC.len() + 2;
        if bytes.len() < header + 1 + 4 + DIGEST_BYTES {
            return Err(Error::Format(format!("checkpoint of {} bytes is truncated", bytes.len())));
        }
        if &bytes[..CHECKPOINT_MAGIC.len()] != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a model checkpoint (bad magic)".into()));
        }
        let version = u16::from_le_bytes([bytes[10], bytes[11]]);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})"
            )));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_BYTES);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Format("checkpoint digest mismatch".into()));
        }
        let mut r = Cursor { buf: body, pos: header };
        let kind_code = r.u8()?;
        let kind = ModelKind::from_code(kind_code)
            .ok_or_else(|| Error::Format(format!("unknown model kind code {kind_code}")))?;
        let len = r.u32()? as usize;
        let meta: CheckpointMeta = serde_json::from_slice(r.take(len)?)
            .map_err(|e| Error::Format(format!("hyperparameter record: {e}")))?;
        if meta.model.kind() != kind {
            return Err(Error::Format(format!(
                "kind byte says {kind} but the hyperparameter record describes {}",
                meta.model.kind()
            )));
        }
        let count = r.u32()?;
        let mut params = ParamStore::new();
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?
                .to_string();
            let rank = r.u8()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32()? as usize);
            }
            let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let n = n.ok_or_else(|| Error::Format(format!("parameter `{name}` is too large")))?;
            let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::Format("tensor too large".into()))?)?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let t = Tensor::new(shape, values).map_err(|e| Error::Format(format!("parameter `{name}`: {e}")))?;
            if params.contains(&name) {
                return Err(Error::Format(format!("parameter `{name}` appears twice")));
            }
            params.insert(name, t);
        }
        if r.pos != body.len() {
            return Err(Error::Format(format!("{} trailing bytes after the last tensor", body.len() - r.pos)));
        }
        meta.model
            .validate()
            .map_err(|e| Error::Format(format!("hyperparameter record: {e}")))?;
        meta.model
            .check_params(&params)
            .map_err(|e| Error::Format(format!("checkpoint tensors: {e}")))?;
        Ok(Checkpoint { meta, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Checkpoint::from_bytes(&read_file(path)?)
    }
}

/// First 8 bytes of a digest, little-endian.
pub fn model_id(digest: &[u8; 32]) -> u64 {
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn u32_len(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u32")))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format("checkpoint is truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
