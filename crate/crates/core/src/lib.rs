//! Visually grounded sentence-embedding spaces.
//!
//! Starting from precomputed sentence and image embeddings plus the
//! caption-to-image association of a captioning corpus, this crate trains a
//! grounded space with a cluster objective (visually equivalent captions are
//! pulled together by a max-margin ranking loss) and a perceptual objective
//! (pairwise sentence similarities are made to correlate with the matching
//! image similarities). It also ships the cross-modal projection and
//! sequential baselines and the structural and relatedness metrics used to
//! probe the resulting spaces.
//!
//! Module map:
//! - [`embedstore`]: embedding matrices, corpora, file formats, synthetic data
//! - [`numcore`]: cosine kernels, the 2-layer projector, ADAM
//! - [`grounding`]: samplers and losses with exact gradients
//! - [`trainer`]: the training loop and checkpoints
//! - [`evalmetrics`]: mNNO, ρ_vis, C_intra / C_inter, relatedness, kNN, concreteness
//! - [`baselines`]: the sequential (regression + concatenation + PCA) baseline

pub mod baselines;
pub mod binio;
pub mod embedstore;
pub mod error;
pub mod evalmetrics;
pub mod grounding;
pub mod numcore;
pub mod rng;
pub mod trainer;

pub use error::Error;
