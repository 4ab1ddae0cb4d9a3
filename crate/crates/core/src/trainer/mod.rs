//! The grounding training loop.
//!
//! An epoch visits every caption once as an anchor, in an order shuffled by
//! the epoch's random stream, and cuts the anchors into batches. Depending on
//! the scenario each batch yields cluster triplets, similarity pairs, or
//! cross-modal items; the loss gradients then drive one ADAM step over the
//! projector and, when fine-tuning, the sentence rows.

mod config;
mod log;
mod run;

pub use config::{Scenario, TrainConfig};
pub use log::{EpochRecord, TrainLog};
pub use run::{load_checkpoint, resume, save_checkpoint, train, TrainOutcome};

use thiserror::Error;

use crate::embedstore::StoreError;
use crate::evalmetrics::MetricError;
use crate::grounding::GroundingError;
use crate::numcore::NumError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("epoch {epoch}: {skipped} of {batches} batches had degenerate similarity variance")]
    TooManyDegenerate {
        epoch: usize,
        skipped: usize,
        batches: usize,
    },
    #[error("epoch {epoch}, batch {batch}: non-finite {what}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        what: &'static str,
    },
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Store(#[from] StoreError),
}
