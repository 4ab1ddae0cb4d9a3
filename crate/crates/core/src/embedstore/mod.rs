//! Embedding matrices, caption corpora and their on-disk formats.
//!
//! Binary embedding files (`GEMB`):
//!
//! ```text
//! "GEMB" | u8 version = 1 | u8 precision (4 | 8) | u32 n | u32 d | n*d floats (row-major) | u32 crc32(payload)
//! ```
//!
//! All integers and floats are little-endian. The corpus, relatedness and
//! concreteness files are UTF-8 TSV.

mod corpus;
mod matrix;
mod synth;
mod text;

pub use corpus::{load_corpus, save_corpus, CaptionCorpus};
pub use matrix::{load_embeddings, read_embeddings, save_embeddings, write_embeddings, EmbeddingMatrix, Precision};
pub use synth::{gen_synthetic, SynthParams, SyntheticData};
pub use text::{
    load_lexicon, load_relatedness, parse_lexicon, parse_relatedness, tokenize, ConcretenessLexicon, RelatednessPair,
};

use std::path::PathBuf;
use thiserror::Error;

use crate::binio::FrameError;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in row {row} (byte offset {offset})")]
    NonFiniteValue { row: usize, offset: usize },
    #[error("line {line}: duplicate caption id {id:?}")]
    DuplicateCaptionId { line: usize, id: String },
    #[error("line {line}: caption {caption:?} has no valid image reference")]
    DanglingImageRef { line: usize, caption: String },
    #[error("image {image:?} owns no captions")]
    EmptyCluster { image: String },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown caption id {id:?} at line {line}")]
    UnknownCaptionId { line: usize, id: String },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("i/o failure on {path:?}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl StoreError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<FrameError> for StoreError {
    fn from(e: FrameError) -> Self {
        let offset = match &e {
            FrameError::Truncated { offset, .. }
            | FrameError::Checksum { offset, .. }
            | FrameError::Invalid { offset, .. } => *offset,
            FrameError::BadMagic { .. } => 0,
        };
        StoreError::MalformedHeader {
            offset,
            reason: e.to_string(),
        }
    }
}
