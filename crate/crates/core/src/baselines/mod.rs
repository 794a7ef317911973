//! Comparison models: a flat MLP auto-encoder and a message-passing network
//! over the line graph of the backbone.

mod line_graph;
mod mlp_ae;
mod mpnn;

pub use line_graph::{build_line_graph, LineGraph};
pub use mlp_ae::{bottleneck_size, mlp_ae, MlpAeConfig};
pub use mpnn::{mpnn_compress, mpnn_forward, MpnnConfig};
