//! Intrinsic evaluation of embedding spaces.
//!
//! Structural measures probe how much of the visual structure a sentence
//! space carries:
//! - `mnno`: mean overlap between a caption's nearest neighbours (mapped to
//!   their images) and its image's nearest neighbours in the visual space;
//! - `rho_vis`: Pearson correlation between caption-pair cosines and the
//!   cosines of their images;
//! - `c_intra` / `c_inter`: mean cosine of same-image / different-image
//!   caption pairs.
//!
//! Relatedness is the Spearman correlation between pair cosines and gold
//! similarity scores. All reported structural values are scaled by 100.

mod concreteness;
mod correlation;
mod retrieval;
mod structure;

pub use concreteness::avg_concreteness;
pub use correlation::{average_ranks, pearson, spearman};
pub use retrieval::{knn_report, relatedness, relatedness_scores, Neighbor, RelatednessScores};
pub use structure::{cluster_stats, mnno, rho_vis, unit_rows, ClusterStats, INTER_PAIR_BUDGET};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedstore::CaptionCorpus;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("invalid neighbourhood size k = {k} (must satisfy 1 <= k <= {max})")]
    InvalidK { k: usize, max: usize },
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("empty expectation: {0}")]
    EmptyExpectation(String),
    #[error("no token of the texts appears in the concreteness lexicon")]
    NoCoveredToken,
    #[error("row {row} has (near) zero norm")]
    ZeroNorm { row: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Settings shared by the structural measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    /// Neighbourhood size of mNNO.
    pub k: usize,
    /// Pairs sampled for `rho_vis`; `None` means ten per caption.
    pub rho_pairs: Option<usize>,
    pub seed: u64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            k: 10,
            rho_pairs: None,
            seed: 0,
        }
    }
}

/// Structural measures of one space, each scaled by 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mnno: f64,
    pub rho_vis: f64,
    pub c_inter: f64,
    pub c_intra: f64,
    pub k: usize,
    pub rho_pairs: usize,
    pub seed: u64,
}

/// Computes every structural measure of `space` (one row per caption)
/// against the visual space `images` (one row per image).
pub fn evaluate(
    space: ArrayView2<'_, f64>,
    images: ArrayView2<'_, f64>,
    corpus: &CaptionCorpus,
    opts: &MetricOptions,
) -> Result<MetricReport, MetricError> {
    let rho_pairs = opts.rho_pairs.unwrap_or(10 * corpus.num_captions());
    let stats = cluster_stats(space, corpus, opts.seed)?;
    Ok(MetricReport {
        mnno: 100.0 * mnno(space, images, corpus, opts.k)?,
        rho_vis: 100.0 * rho_vis(space, images, corpus, rho_pairs, opts.seed)?,
        c_inter: stats.c_inter,
        c_intra: stats.c_intra,
        k: opts.k,
        rho_pairs,
        seed: opts.seed,
    })
}
