//! Lossy compression of signals over network links.
//!
//! The numeric stack is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the two supported precisions.

pub mod autodiff;
pub mod baselines;
pub mod checkpoint;
pub mod compression;
pub mod error;
pub mod harness;
pub mod inference;
pub mod ingestion;
pub mod io;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor32 = autodiff::Tensor<f32>;
pub type Tensor64 = autodiff::Tensor<f64>;
pub type ParamStore32 = autodiff::ParamStore<f32>;
pub type ParamStore64 = autodiff::ParamStore<f64>;
pub type Graph32 = autodiff::Graph<f32>;
pub type Graph64 = autodiff::Graph<f64>;
pub type Artifact32 = compression::CompressedArtifact<f32>;
