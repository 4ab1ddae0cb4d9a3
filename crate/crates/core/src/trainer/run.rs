use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;

use super::{EpochRecord, Scenario, TrainConfig, TrainError, TrainLog};
use crate::embedstore::{CaptionCorpus, EmbeddingMatrix, StoreError};
use crate::evalmetrics::evaluate;
use crate::grounding::{
    cm_loss, grounded_loss, max_pairs, sample_cm_items, sample_pairs, Gradients, GroundingError, Projection,
    TripletSampler,
};
use crate::numcore::{
    read_checkpoint, write_checkpoint, AdamConfig, AdamState, Checkpoint, GroundedProjector, OptimizerSnapshot,
};
use crate::rng::stream_rng;

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub config: TrainConfig,
    /// `None` when `g = id`.
    pub projector: Option<GroundedProjector>,
    /// Sentence rows after training; a copy of the input unless fine-tuned.
    pub sentences: Array2<f64>,
    pub log: TrainLog,
    pub optimizer: AdamState,
    pub epochs_done: usize,
}

impl TrainOutcome {
    /// The trained space: `g(s)` for every caption, or the sentence rows when `g = id`.
    pub fn space(&self) -> Result<Array2<f64>, TrainError> {
        project(self.projector.as_ref(), self.sentences.view())
    }

    /// Checkpoint of the projector. It carries the optimizer state, and so
    /// can be resumed, only when the projector is the sole trained tensor set.
    pub fn checkpoint(&self) -> Option<Checkpoint> {
        let projector = self.projector.clone()?;
        let optimizer = (!self.config.finetune_embeddings).then(|| OptimizerSnapshot {
            adam: self.optimizer.clone(),
            epochs_done: self.epochs_done as u64,
        });
        Some(Checkpoint { projector, optimizer })
    }
}

fn project(projector: Option<&GroundedProjector>, sentences: ArrayView2<'_, f64>) -> Result<Array2<f64>, TrainError> {
    match projector {
        Some(p) => Ok(p.forward_batch(sentences)?.0),
        None => Ok(sentences.to_owned()),
    }
}

struct State {
    projector: Option<GroundedProjector>,
    sentences: Array2<f64>,
    adam: AdamState,
    epochs_done: usize,
}

fn adam_config(config: &TrainConfig) -> AdamConfig {
    AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    }
}

fn check_data(sentences: &EmbeddingMatrix, images: &EmbeddingMatrix, corpus: &CaptionCorpus) -> Result<(), TrainError> {
    corpus.check_rows(sentences, Some(images))?;
    Ok(())
}

/// Trains from scratch. The projector is initialized from stream 0 of the
/// seed; epoch `e` (1-based) samples from stream `e`.
pub fn train(
    config: &TrainConfig,
    sentences: &EmbeddingMatrix,
    images: &EmbeddingMatrix,
    corpus: &CaptionCorpus,
) -> Result<TrainOutcome, TrainError> {
    check_data(sentences, images, corpus)?;
    config.validate(sentences.dim(), images.dim())?;
    let projector = config.grounded_space.then(|| {
        let mut rng = stream_rng(config.seed, 0);
        GroundedProjector::init(sentences.dim(), config.d_h, config.out_dim(images.dim()), &mut rng)
    });
    let state = State {
        projector,
        sentences: sentences.as_array().clone(),
        adam: AdamState::new(adam_config(config)),
        epochs_done: 0,
    };
    run(config, state, images, corpus)
}

/// Continues a run from a resumable checkpoint up to `config.epochs`.
pub fn resume(
    config: &TrainConfig,
    sentences: &EmbeddingMatrix,
    images: &EmbeddingMatrix,
    corpus: &CaptionCorpus,
    checkpoint: &Checkpoint,
) -> Result<TrainOutcome, TrainError> {
    check_data(sentences, images, corpus)?;
    config.validate(sentences.dim(), images.dim())?;
    if !config.grounded_space || config.finetune_embeddings {
        return Err(TrainError::Resume(
            "only runs that train the projector alone can be resumed from a checkpoint".into(),
        ));
    }
    let snapshot = checkpoint
        .optimizer
        .as_ref()
        .ok_or_else(|| TrainError::Resume("checkpoint holds no optimizer state".into()))?;
    let p = &checkpoint.projector;
    let want = (sentences.dim(), config.d_h, config.out_dim(images.dim()));
    if (p.d_in(), p.d_hidden(), p.d_out()) != want {
        return Err(TrainError::Resume(format!(
            "checkpoint projector is {}x{}x{}, configuration needs {}x{}x{}",
            p.d_in(),
            p.d_hidden(),
            p.d_out(),
            want.0,
            want.1,
            want.2
        )));
    }
    if snapshot.adam.config != adam_config(config) {
        return Err(TrainError::Resume(
            "optimizer settings differ from the configuration".into(),
        ));
    }
    let state = State {
        projector: Some(p.clone()),
        sentences: sentences.as_array().clone(),
        adam: snapshot.adam.clone(),
        epochs_done: snapshot.epochs_done as usize,
    };
    run(config, state, images, corpus)
}

#[derive(Default)]
struct Sums {
    c: f64,
    p: f64,
    cm: f64,
    total: f64,
    used: usize,
}

fn run(
    config: &TrainConfig,
    mut state: State,
    images: &EmbeddingMatrix,
    corpus: &CaptionCorpus,
) -> Result<TrainOutcome, TrainError> {
    let scenario = config.scenario;
    let weights = config.loss_weights();
    let sampler = if scenario.uses_cluster() {
        Some(TripletSampler::new(corpus)?)
    } else {
        None
    };
    let n_pairs = if scenario.uses_perceptual() {
        let available = max_pairs(corpus, config.allow_same_image_pairs);
        let n = (config.batch_pairs as u64).min(available) as usize;
        if n < 2 {
            return Err(GroundingError::InsufficientPairs(format!("only {available} caption pairs available")).into());
        }
        n
    } else {
        0
    };
    let n = corpus.num_captions();
    let images = images.view();
    let mut log = TrainLog::default();

    for epoch in state.epochs_done + 1..=config.epochs {
        let started = Instant::now();
        let mut rng = stream_rng(config.seed, epoch as u64);
        let mut anchors: Vec<usize> = (0..n).collect();
        anchors.shuffle(&mut rng);
        let mut sums = Sums::default();
        let mut batches = 0;
        let mut skipped = 0;

        for (b, chunk) in anchors.chunks(config.batch_triplets).enumerate() {
            batches += 1;
            let projection = match &state.projector {
                Some(p) => Projection::Mlp {
                    projector: p,
                    input_grads: config.finetune_embeddings,
                },
                None => Projection::Identity,
            };
            let grads: Gradients = if scenario == Scenario::CM {
                let items = sample_cm_items(corpus, chunk, &mut rng)?;
                let out = cm_loss(state.sentences.view(), images, projection, &items, config.gamma_prime)?;
                sums.cm += out.loss;
                sums.total += out.loss;
                out.grads
            } else {
                let triplets = match &sampler {
                    Some(s) => s.for_anchors(chunk, &mut rng),
                    None => Vec::new(),
                };
                let pairs = if n_pairs > 0 {
                    sample_pairs(corpus, n_pairs, config.allow_same_image_pairs, &mut rng)?
                } else {
                    Vec::new()
                };
                match grounded_loss(state.sentences.view(), images, projection, &triplets, &pairs, &weights) {
                    Ok(out) => {
                        sums.c += out.cluster.unwrap_or(0.0);
                        sums.p += out.perceptual.unwrap_or(0.0);
                        sums.total += out.total;
                        out.grads
                    }
                    Err(GroundingError::DegenerateVariance(_)) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            sums.used += 1;
            if !grads.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    batch: b,
                    what: "gradient",
                });
            }
            apply_step(&mut state, &grads, config.finetune_embeddings);
            let finite = state.projector.as_ref().is_none_or(GroundedProjector::is_finite)
                && (!config.finetune_embeddings || state.sentences.iter().all(|v| v.is_finite()));
            if !finite {
                return Err(TrainError::NonFinite {
                    epoch,
                    batch: b,
                    what: "parameter",
                });
            }
        }

        if 2 * skipped > batches {
            return Err(TrainError::TooManyDegenerate {
                epoch,
                skipped,
                batches,
            });
        }
        state.epochs_done = epoch;
        let used = sums.used.max(1) as f64;
        let metrics = if config.snapshot_every > 0 && epoch % config.snapshot_every == 0 {
            let space = project(state.projector.as_ref(), state.sentences.view())?;
            Some(evaluate(space.view(), images, corpus, &config.metrics)?)
        } else {
            None
        };
        log.records.push(EpochRecord {
            epoch,
            loss_c: scenario.uses_cluster().then_some(sums.c / used),
            loss_p: scenario.uses_perceptual().then_some(sums.p / used),
            loss_cm: (scenario == Scenario::CM).then_some(sums.cm / used),
            total: sums.total / used,
            batches,
            skipped,
            wall_time: config.record_wall_time.then(|| started.elapsed().as_secs_f64()),
            metrics,
        });
    }

    Ok(TrainOutcome {
        config: config.clone(),
        projector: state.projector,
        sentences: state.sentences,
        log,
        optimizer: state.adam,
        epochs_done: state.epochs_done,
    })
}

fn apply_step(state: &mut State, grads: &Gradients, finetune: bool) {
    let (n, d) = state.sentences.dim();
    let row_grads = finetune.then(|| grads.dense_rows(n, d));
    let zero_proj = state
        .projector
        .as_ref()
        .filter(|_| grads.projector.is_none())
        .map(crate::numcore::ProjectorGrads::zeros_like);
    let proj_grads = grads.projector.as_ref().or(zero_proj.as_ref());

    let mut slots: Vec<(&mut [f64], &[f64])> = Vec::with_capacity(5);
    if let (Some(p), Some(g)) = (state.projector.as_mut(), proj_grads) {
        for (param, grad) in p.tensors_mut().into_iter().zip(g.tensors()) {
            slots.push((param, grad));
        }
    }
    if let Some(rg) = &row_grads {
        slots.push((
            state.sentences.as_slice_mut().expect("standard layout"),
            rg.as_slice().expect("standard layout"),
        ));
    }
    state.adam.step(&mut slots);
}

/// Writes `checkpoint` in the `GPRJ` format.
pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<(), TrainError> {
    let path = path.as_ref();
    std::fs::write(path, write_checkpoint(checkpoint)).map_err(|e| StoreError::io(path, e))?;
    Ok(())
}

/// Reads a `GPRJ` checkpoint; framing and checksum failures surface as
/// [`StoreError::MalformedHeader`].
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, TrainError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| StoreError::io(path, e))?;
    read_checkpoint(&bytes).map_err(|e| TrainError::Store(e.into()))
}
