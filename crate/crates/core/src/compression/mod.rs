//! SetMP and CombMP compression, the shared decoder, ratio accounting and
//! the compressed artifact format.

mod artifact;
mod config;
mod ops;
pub mod pipeline;
mod ratio;
mod structure;

pub use artifact::{ArtifactMeta, CompressedArtifact, ARTIFACT_HEADER_BYTES, ARTIFACT_MAGIC, ARTIFACT_VERSION};
pub use config::{role, Pipeline, TopoConfig};
pub use ops::{
    combmp_rounds, compress_combmp, compress_setmp, decompress, init_structure_embeddings, TopoState,
};
pub use ratio::{compression_ratio, flat_ratio, per_node_ratio, CompressionRatio};
pub use structure::{EdgeIndex, EdgeStructure, Structure};
