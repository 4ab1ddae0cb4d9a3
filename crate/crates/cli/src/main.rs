mod args;
mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use groundspace::baselines::BaselineError;
use groundspace::binio::FrameError;
use groundspace::embedstore::StoreError;
use groundspace::evalmetrics::MetricError;
use groundspace::grounding::GroundingError;
use groundspace::numcore::NumError;
use groundspace::trainer::TrainError;

use args::{Cli, Command};
use commands::Invocation;
use config::ConfigError;

const EXIT_IO: u8 = 3;
const EXIT_FORMAT: u8 = 4;
const EXIT_CONFIG: u8 = 5;
const EXIT_NUMERIC: u8 = 6;
const EXIT_DATA: u8 = 7;
const EXIT_TRAINING: u8 = 8;

/// Invalid flag combinations clap cannot express.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn store_code(e: &StoreError) -> u8 {
    match e {
        StoreError::Io { .. } => EXIT_IO,
        StoreError::MalformedHeader { .. } | StoreError::NonFiniteValue { .. } => EXIT_FORMAT,
        StoreError::InvalidParam(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

fn grounding_code(e: &GroundingError) -> u8 {
    match e {
        GroundingError::DegenerateVariance(_) | GroundingError::Numeric(_) => EXIT_NUMERIC,
        GroundingError::InvalidWeights(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<TrainError>() {
            return match e {
                TrainError::InvalidConfig(_) | TrainError::Resume(_) => EXIT_CONFIG,
                TrainError::TooManyDegenerate { .. } | TrainError::NonFinite { .. } => EXIT_TRAINING,
                TrainError::Grounding(g) => grounding_code(g),
                TrainError::Numeric(_) | TrainError::Metric(_) => EXIT_NUMERIC,
                TrainError::Store(s) => store_code(s),
            };
        }
        if let Some(e) = cause.downcast_ref::<StoreError>() {
            return store_code(e);
        }
        if let Some(e) = cause.downcast_ref::<GroundingError>() {
            return grounding_code(e);
        }
        if let Some(e) = cause.downcast_ref::<BaselineError>() {
            return match e {
                BaselineError::SingularSystem(_) => EXIT_NUMERIC,
                BaselineError::InvalidM { .. } | BaselineError::InvalidParam(_) => EXIT_CONFIG,
                BaselineError::ShapeMismatch(_) => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<MetricError>() {
            return match e {
                MetricError::InvalidK { .. } => EXIT_CONFIG,
                MetricError::DegenerateVariance(_) | MetricError::ZeroNorm { .. } => EXIT_NUMERIC,
                _ => EXIT_DATA,
            };
        }
        if cause.is::<NumError>() {
            return EXIT_NUMERIC;
        }
        if cause.is::<FrameError>() || cause.is::<serde_json::Error>() {
            return EXIT_FORMAT;
        }
        if cause.is::<ConfigError>() || cause.is::<UsageError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    1
}

fn run() -> Result<()> {
    let argv = config::expand_config(std::env::args_os().collect())?;
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!(UsageError("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let inv = Invocation {
        argv: argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
    };
    match &cli.command {
        Command::Gen(a) => commands::gen(a, &inv),
        Command::Train(a) => commands::train_cmd(a, &inv),
        Command::Metrics(a) => commands::metrics(a, &inv),
        Command::Relatedness(a) => commands::relatedness(a, &inv),
        Command::Knn(a) => commands::knn(a, &inv),
        Command::Seq(a) => commands::seq(a, &inv),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
