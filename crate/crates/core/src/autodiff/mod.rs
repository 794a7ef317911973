//! Minimal dense-matrix engine with reverse-mode differentiation and Adam.

mod adam;
mod graph;
mod mlp;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use graph::{Gradients, Graph, Segments, Var};
pub use mlp::{mlp_forward, Activation, MlpSpec};
pub use tensor::{ParamStore, Tensor};
