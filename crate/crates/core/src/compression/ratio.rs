use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stored code floats over raw floats of one subsignal.
///
/// Displays unreduced (`234/720`); [`CompressionRatio::ratio`] is reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionRatio {
    pub stored: u64,
    pub raw: u64,
}

impl CompressionRatio {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.stored, self.raw)
    }

    pub fn to_f64(&self) -> f64 {
        self.stored as f64 / self.raw as f64
    }
}

impl std::fmt::Display for CompressionRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.stored, self.raw)
    }
}

/// `(N * dvc + K * dwc) / (N * d)`.
pub fn compression_ratio(n: usize, d: usize, k: usize, dvc: usize, dwc: usize) -> Result<CompressionRatio> {
    if [n, d, k, dvc, dwc].contains(&0) {
        return Err(Error::Parameter(format!(
            "compression ratio needs positive N, d, K, dvc, dwc (got {n}, {d}, {k}, {dvc}, {dwc})"
        )));
    }
    Ok(CompressionRatio {
        stored: (n * dvc + k * dwc) as u64,
        raw: (n * d) as u64,
    })
}

/// Ratio of a code that stores `code` floats per node and nothing else.
pub fn per_node_ratio(n: usize, d: usize, code: usize) -> Result<CompressionRatio> {
    if [n, d, code].contains(&0) {
        return Err(Error::Parameter("per-node ratio needs positive N, d and code width".into()));
    }
    Ok(CompressionRatio {
        stored: (n * code) as u64,
        raw: (n * d) as u64,
    })
}

/// Ratio of a single flat code of `code` floats.
pub fn flat_ratio(n: usize, d: usize, code: usize) -> Result<CompressionRatio> {
    if [n, d, code].contains(&0) {
        return Err(Error::Parameter("flat ratio needs positive N, d and code width".into()));
    }
    Ok(CompressionRatio {
        stored: code as u64,
        raw: (n * d) as u64,
    })
}
