use thiserror::Error;

use crate::baselines::BaselineError;
use crate::binio::FrameError;
use crate::embedstore::StoreError;
use crate::evalmetrics::MetricError;
use crate::grounding::GroundingError;
use crate::numcore::NumError;
use crate::trainer::TrainError;

/// Any error raised by the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}
