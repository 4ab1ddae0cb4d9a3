use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use groundspace::embedstore::Precision;
use groundspace::trainer::Scenario;
use serde::Serialize;

/// Train and probe visually grounded sentence-embedding spaces.
#[derive(Debug, Parser)]
#[command(name = "groundspace", version, about, args_override_self = true)]
pub struct Cli {
    /// Worker threads for parallel metric evaluation (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Flat `key = value` file whose entries act as flags of the subcommand;
    /// flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

pub const SUBCOMMANDS: [&str; 6] = ["gen", "train", "metrics", "relatedness", "knn", "seq"];

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic captioning corpus with embeddings.
    Gen(GenArgs),
    /// Train a grounded space (or the cross-modal projection baseline).
    Train(TrainArgs),
    /// Structural measures of a space as JSON.
    Metrics(MetricsArgs),
    /// Semantic relatedness of a space against gold pair scores.
    Relatedness(RelatednessArgs),
    /// Nearest-neighbour listings as TSV.
    Knn(KnnArgs),
    /// Fit and apply the sequential (regression + PCA) baseline.
    Seq(SeqArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Output directory for sentences.gemb, images.gemb, corpus.tsv and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub clusters: usize,
    #[arg(long, default_value_t = 5)]
    pub captions_per_cluster: usize,
    #[arg(long, default_value_t = 64)]
    pub d_t: usize,
    #[arg(long, default_value_t = 32)]
    pub d_i: usize,
    /// Per-coordinate caption noise.
    #[arg(long, default_value_t = 0.4)]
    pub sigma: f64,
    #[arg(long, env = "GROUNDSPACE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "f64")]
    pub precision: Precision,
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Output directory for the trained space, projector, log and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "cp")]
    pub scenario: Scenario,
    /// Use a 2-layer MLP as the grounded space instead of the identity.
    #[arg(long)]
    pub grounded_space: bool,
    /// Update the sentence rows as well.
    #[arg(long)]
    pub finetune_embeddings: bool,
    #[arg(long)]
    pub allow_same_image_pairs: bool,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma_prime: f64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha_c: f64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha_p: f64,
    #[arg(long, default_value_t = 8e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 512)]
    pub d_g: usize,
    #[arg(long, default_value_t = 512)]
    pub d_h: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_triplets: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_pairs: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, env = "GROUNDSPACE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Evaluate structural measures every N epochs (0 = never).
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub rho_pairs: Option<usize>,
    /// Record per-epoch wall time in the log.
    #[arg(long)]
    pub record_wall_time: bool,
    /// Continue from a projector checkpoint that carries optimizer state.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

/// Where the evaluated space comes from: a stored matrix, or sentences
/// pushed through a projector checkpoint.
#[derive(Debug, Args, Serialize)]
pub struct SpaceArgs {
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    pub space: Option<PathBuf>,
    #[arg(long, requires = "sentences")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub sentences: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Pairs sampled for rho_vis (default: ten per caption).
    #[arg(long)]
    pub rho_pairs: Option<usize>,
    #[arg(long, env = "GROUNDSPACE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RelatednessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    /// `caption_a \t caption_b \t score` lines.
    #[arg(long)]
    pub pairs: PathBuf,
    /// `word \t score` concreteness ratings; adds the mean concreteness of the pair texts.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KnnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Caption id to list neighbours for (repeatable).
    #[arg(long = "query", required = true)]
    pub queries: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SeqArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub ridge_lambda: f64,
    /// Output path of the grounded sentence embeddings.
    #[arg(long)]
    pub out: PathBuf,
    /// Also store the fitted regression and PCA.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}
