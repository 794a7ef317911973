//! Compressed subsignal and its binary layout.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "TGSC"
//! 4       2         format version (u16)
//! 6       6 x 4     N, d, K, p, dvc, dwc (u32)
//! 30      8         model id (u64)
//! 38      8 + 8     normalization min, max (f64)
//! 54      2N        hyperedge index of every node (u16)
//! ..      4 N dvc   node codes (f32, row-major)
//! ..      4 K dwc   hyperedge codes (f32, row-major)
//! ```
//!
//! All integers and floats are little-endian.

use crate::autodiff::Tensor;
use crate::compression::ratio::{compression_ratio, CompressionRatio};
use crate::error::{Error, Result};
use crate::ingestion::Normalization;
use crate::scalar::Scalar;

pub const ARTIFACT_MAGIC: &[u8; 4] = b"TGSC";
pub const ARTIFACT_VERSION: u16 = 1;
pub const ARTIFACT_HEADER_BYTES: usize = 54;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArtifactMeta {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub p: usize,
    pub dvc: usize,
    pub dwc: usize,
    pub model_id: u64,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressedArtifact<S> {
    pub meta: ArtifactMeta,
    /// Hyperedge index of every node.
    pub membership: Vec<usize>,
    /// `N x dvc`.
    pub node_codes: Tensor<S>,
    /// `K x dwc`.
    pub hyper_codes: Tensor<S>,
}

impl<S: Scalar> CompressedArtifact<S> {
    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        if self.membership.len() != m.n {
            return Err(Error::dim("artifact partition", m.n, self.membership.len()));
        }
        if let Some(&bad) = self.membership.iter().find(|&&h| h >= m.k) {
            return Err(Error::Validation(format!("node mapped to hyperedge {bad} of {}", m.k)));
        }
        if self.node_codes.rows() != m.n || self.node_codes.cols() != m.dvc {
            return Err(Error::dim("node codes", m.n * m.dvc, self.node_codes.len()));
        }
        if self.hyper_codes.rows() != m.k || self.hyper_codes.cols() != m.dwc {
            return Err(Error::dim("hyperedge codes", m.k * m.dwc, self.hyper_codes.len()));
        }
        Ok(())
    }

    /// Floats stored for the codes: `N * dvc + K * dwc`.
    pub fn stored_floats(&self) -> usize {
        self.node_codes.len() + self.hyper_codes.len()
    }

    pub fn ratio(&self) -> Result<CompressionRatio> {
        let m = &self.meta;
        compression_ratio(m.n, m.d, m.k, m.dvc, m.dwc)
    }

    pub fn encoded_len(&self) -> usize {
        ARTIFACT_HEADER_BYTES + 2 * self.meta.n + 4 * self.stored_floats()
    }

    /// Serializes with codes rounded to f32.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let m = &self.meta;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(ARTIFACT_MAGIC);
        out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
        for v in [m.n, m.d, m.k, m.p, m.dvc, m.dwc] {
            let v = u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")))?;
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&m.model_id.to_le_bytes());
        out.extend_from_slice(&m.normalization.min.to_le_bytes());
        out.extend_from_slice(&m.normalization.max.to_le_bytes());
        for &h in &self.membership {
            let h = u16::try_from(h).map_err(|_| Error::Format(format!("hyperedge index {h} exceeds u16")))?;
            out.extend_from_slice(&h.to_le_bytes());
        }
        for v in self.node_codes.values().iter().chain(self.hyper_codes.values()) {
            out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
        Ok(out)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("artifact truncated while reading {what} at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }
}

impl CompressedArtifact<f32> {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(4, "magic")? != ARTIFACT_MAGIC {
            return Err(Error::Format("not a compressed artifact (bad magic)".into()));
        }
        let version = u16::from_le_bytes(c.array("version")?);
        if version != ARTIFACT_VERSION {
            return Err(Error::Format(format!(
                "artifact format version {version} is not supported (expected {ARTIFACT_VERSION})"
            )));
        }
        let mut dims = [0usize; 6];
        for d in &mut dims {
            *d = u32::from_le_bytes(c.array("metadata")?) as usize;
        }
        let [n, d, k, p, dvc, dwc] = dims;
        if [n, d, k, dvc, dwc].contains(&0) {
            return Err(Error::Format("artifact metadata has a zero dimension".into()));
        }
        let model_id = u64::from_le_bytes(c.array("model id")?);
        let min = f64::from_le_bytes(c.array("normalization")?);
        let max = f64::from_le_bytes(c.array("normalization")?);
        let membership = (0..n)
            .map(|_| Ok(u16::from_le_bytes(c.array("partition")?) as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut floats = |count: usize, what: &str| -> Result<Vec<f32>> {
            let raw = c.take(count * 4, what)?;
            Ok(raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("chunk of 4")))
                .collect())
        };
        let node = floats(n * dvc, "node codes")?;
        let hyper = floats(k * dwc, "hyperedge codes")?;
        if c.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after the artifact",
                bytes.len() - c.pos
            )));
        }
        let art = CompressedArtifact {
            meta: ArtifactMeta {
                n,
                d,
                k,
                p,
                dvc,
                dwc,
                model_id,
                normalization: Normalization { min, max },
            },
            membership,
            node_codes: Tensor::matrix(n, dvc, node)?,
            hyper_codes: Tensor::matrix(k, dwc, hyper)?,
        };
        art.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(art)
    }
}
