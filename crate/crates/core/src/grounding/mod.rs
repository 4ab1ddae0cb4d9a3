//! Grounding objectives and the samplers that feed them.
//!
//! - cluster loss: max-margin ranking over `(anchor, positive, negative)`
//!   caption triplets in the grounded space;
//! - perceptual loss: negative Pearson correlation between grounded-space
//!   caption similarities and the similarities of their images;
//! - grounded loss: `alpha_c * L_C + alpha_p * L_P`;
//! - cross-modal projection loss: the CM baseline, a max-margin loss that
//!   maps sentences straight into the visual space.
//!
//! Every loss returns its value together with exact gradients for the
//! projector parameters and, when asked, for the sentence rows it touched.

mod batch;
mod losses;
mod sampling;

pub use batch::{Gradients, Projection};
pub use losses::{cluster_loss, cm_loss, grounded_loss, perceptual_loss, GroundedLoss, LossOutput, LossWeights};
pub use sampling::{
    max_pairs, sample_cm_items, sample_pairs, sample_triplets, CmItem, SimPair, Triplet, TripletSampler,
};

use thiserror::Error;

use crate::numcore::NumError;

/// Population variance at or below this makes a Pearson correlation undefined.
pub const MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GroundingError {
    #[error("no valid triplet: {0}")]
    NoValidTriplet(String),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("cannot draw pairs: {0}")]
    InsufficientPairs(String),
    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid loss weights: {0}")]
    InvalidWeights(String),
    #[error(transparent)]
    Numeric(#[from] NumError),
}
