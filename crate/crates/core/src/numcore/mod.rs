//! Dense numeric kernels: cosine similarity and its gradient, the 2-layer
//! tanh projector with manual backpropagation, and ADAM.
//!
//! All training math runs in `f64`.

mod adam;
mod checkpoint;
mod cosine;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, OptimizerSnapshot};
pub use cosine::{cosine, cosine_backward, cosine_with_grad, norm, COSINE_EPS};
pub use mlp::{BatchCache, GroundedProjector, MlpCache, ProjectorGrads};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumError {
    #[error("vector norm below {COSINE_EPS:e}")]
    ZeroNorm,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}
