//! Per-subsignal structure inference: node embeddings, SNR similarity,
//! greedy hyperedge clustering and intra-hyperedge edges.

mod cluster;
mod partition;
mod similarity;

pub use cluster::{greedy_cluster, hyperedge_count, hyperedge_sizes, infer_edges, DEFAULT_EDGE_FANOUT};
pub use partition::{HyperedgePartition, PartitionExport};
pub use similarity::{embed_nodes, snr_similarity, SimilarityMatrix, SNR_EPS};
