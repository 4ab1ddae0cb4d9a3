//! The sequential (SEQ) grounding baseline.
//!
//! A ridge regression predicts an "imagined" visual vector from each
//! sentence vector; the sentence vector and its prediction are concatenated
//! and a PCA fitted on the concatenations brings them back to the sentence
//! dimension.

mod linear;
mod pca;
mod seq;

pub use linear::{fit_linear, objective, LinearMap};
pub use pca::{fit_pca, PcaModel};
pub use seq::{fit_seq, read_seq_model, seq_embed, write_seq_model, SeqModel};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("invalid component count m = {m} (must satisfy 1 <= m <= {max})")]
    InvalidM { m: usize, max: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}
