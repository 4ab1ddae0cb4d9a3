use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use groundspace::baselines::{fit_seq, write_seq_model};
use groundspace::embedstore::{
    gen_synthetic, load_corpus, load_embeddings, load_lexicon, load_relatedness, save_corpus, save_embeddings,
    CaptionCorpus, EmbeddingMatrix, Precision, SynthParams,
};
use groundspace::evalmetrics::{avg_concreteness, evaluate, knn_report, relatedness_scores, MetricOptions};
use groundspace::numcore::write_checkpoint;
use groundspace::trainer::{load_checkpoint, resume, train, TrainConfig};
use ndarray::Array2;
use serde::Serialize;

use crate::args::{GenArgs, KnnArgs, MetricsArgs, RelatednessArgs, SeqArgs, SpaceArgs, TrainArgs};
use crate::manifest::{sidecar, RunManifest};

/// Effective argument vector, recorded in manifests.
pub struct Invocation {
    pub argv: Vec<String>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

struct LoadedSpace {
    rows: Array2<f64>,
    inputs: Vec<PathBuf>,
}

fn load_space(args: &SpaceArgs) -> Result<LoadedSpace> {
    match (&args.space, &args.checkpoint, &args.sentences) {
        (Some(space), None, _) => Ok(LoadedSpace {
            rows: load_embeddings(space)?.into_array(),
            inputs: vec![space.clone()],
        }),
        (None, Some(ckpt), Some(sentences)) => {
            let projector = load_checkpoint(ckpt)?.projector;
            let s = load_embeddings(sentences)?;
            let (rows, _) = projector.forward_batch(s.view())?;
            Ok(LoadedSpace {
                rows,
                inputs: vec![ckpt.clone(), sentences.clone()],
            })
        }
        _ => bail!(crate::UsageError(
            "give either --space or --checkpoint with --sentences".into()
        )),
    }
}

pub fn gen(args: &GenArgs, inv: &Invocation) -> Result<()> {
    let data = gen_synthetic(&SynthParams {
        n_clusters: args.clusters,
        captions_per_cluster: args.captions_per_cluster,
        d_t: args.d_t,
        d_i: args.d_i,
        noise_sigma: args.sigma,
        seed: args.seed,
    })?;
    ensure_dir(&args.out_dir)?;
    let sentences = args.out_dir.join("sentences.gemb");
    let images = args.out_dir.join("images.gemb");
    let corpus = args.out_dir.join("corpus.tsv");
    save_embeddings(&data.sentences.with_precision(args.precision)?, &sentences)?;
    save_embeddings(&data.images.with_precision(args.precision)?, &images)?;
    save_corpus(&data.corpus, &corpus)?;
    RunManifest::new(
        "gen",
        &inv.argv,
        args,
        Some(args.seed),
        &[],
        &[&sentences, &images, &corpus],
    )?
    .write(&args.out_dir.join("manifest.json"))
}

pub fn train_cmd(args: &TrainArgs, inv: &Invocation) -> Result<()> {
    let sentences = load_embeddings(&args.data.sentences)?;
    let images = load_embeddings(&args.data.images)?;
    let corpus = load_corpus(&args.data.corpus)?;
    let config = TrainConfig {
        scenario: args.scenario,
        grounded_space: args.grounded_space,
        gamma: args.gamma,
        gamma_prime: args.gamma_prime,
        alpha_c: args.alpha_c,
        alpha_p: args.alpha_p,
        lr: args.lr,
        d_g: args.d_g,
        d_h: args.d_h,
        batch_triplets: args.batch_triplets,
        batch_pairs: args.batch_pairs,
        epochs: args.epochs,
        seed: args.seed,
        finetune_embeddings: args.finetune_embeddings,
        allow_same_image_pairs: args.allow_same_image_pairs,
        record_wall_time: args.record_wall_time,
        snapshot_every: args.snapshot_every,
        metrics: MetricOptions {
            k: args.k,
            rho_pairs: args.rho_pairs,
            seed: args.seed,
        },
    };
    let outcome = match &args.resume {
        Some(path) => resume(&config, &sentences, &images, &corpus, &load_checkpoint(path)?)?,
        None => train(&config, &sentences, &images, &corpus)?,
    };

    ensure_dir(&args.out_dir)?;
    let mut outputs = Vec::new();
    let space_path = args.out_dir.join("space.gemb");
    save_embeddings(&EmbeddingMatrix::new(outcome.space()?, Precision::F64)?, &space_path)?;
    outputs.push(space_path);
    if let Some(ckpt) = outcome.checkpoint() {
        let path = args.out_dir.join("projector.gprj");
        write_file(&path, &write_checkpoint(&ckpt))?;
        outputs.push(path);
    }
    if config.finetune_embeddings {
        let path = args.out_dir.join("sentences.gemb");
        save_embeddings(&EmbeddingMatrix::new(outcome.sentences.clone(), Precision::F64)?, &path)?;
        outputs.push(path);
    }
    let log_path = args.out_dir.join("train_log.jsonl");
    write_file(&log_path, outcome.log.to_jsonl().as_bytes())?;
    outputs.push(log_path);

    let mut inputs: Vec<&Path> = vec![&args.data.sentences, &args.data.images, &args.data.corpus];
    if let Some(r) = &args.resume {
        inputs.push(r);
    }
    let outputs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    RunManifest::new("train", &inv.argv, args, Some(args.seed), &inputs, &outputs)?
        .write(&args.out_dir.join("manifest.json"))
}

fn load_checked_corpus(path: &Path, rows: usize) -> Result<CaptionCorpus> {
    let corpus = load_corpus(path)?;
    if corpus.num_captions() != rows {
        bail!(groundspace::embedstore::StoreError::ShapeMismatch(format!(
            "space has {rows} rows but the corpus has {} captions",
            corpus.num_captions()
        )));
    }
    Ok(corpus)
}

fn finish_report<T: Serialize>(
    command: &str,
    report: &T,
    out: Option<&Path>,
    args: &impl Serialize,
    seed: Option<u64>,
    inputs: &[&Path],
    inv: &Invocation,
) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    emit(out, &text)?;
    if let Some(out) = out {
        RunManifest::new(command, &inv.argv, args, seed, inputs, &[out])?.write(&sidecar(out))?;
    }
    Ok(())
}

pub fn metrics(args: &MetricsArgs, inv: &Invocation) -> Result<()> {
    let space = load_space(&args.space)?;
    let images = load_embeddings(&args.images)?;
    let corpus = load_checked_corpus(&args.corpus, space.rows.nrows())?;
    let opts = MetricOptions {
        k: args.k,
        rho_pairs: args.rho_pairs,
        seed: args.seed,
    };
    let report = evaluate(space.rows.view(), images.view(), &corpus, &opts)?;
    let mut inputs: Vec<&Path> = space.inputs.iter().map(PathBuf::as_path).collect();
    inputs.push(&args.images);
    inputs.push(&args.corpus);
    finish_report(
        "metrics",
        &report,
        args.out.as_deref(),
        args,
        Some(args.seed),
        &inputs,
        inv,
    )
}

#[derive(Serialize)]
struct RelatednessReport {
    spearman: f64,
    pearson: f64,
    pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    concreteness: Option<f64>,
}

pub fn relatedness(args: &RelatednessArgs, inv: &Invocation) -> Result<()> {
    let space = load_space(&args.space)?;
    let corpus = load_checked_corpus(&args.corpus, space.rows.nrows())?;
    let pairs = load_relatedness(&args.pairs, &corpus)?;
    let scores = relatedness_scores(space.rows.view(), &pairs)?;
    let concreteness = match &args.lexicon {
        Some(path) => {
            let lexicon = load_lexicon(path)?;
            let texts = pairs
                .iter()
                .flat_map(|p| [p.index_a, p.index_b])
                .filter_map(|c| corpus.text(c));
            Some(avg_concreteness(texts, &lexicon)?)
        }
        None => None,
    };
    let report = RelatednessReport {
        spearman: scores.spearman,
        pearson: scores.pearson,
        pairs: scores.pairs,
        concreteness,
    };
    let mut inputs: Vec<&Path> = space.inputs.iter().map(PathBuf::as_path).collect();
    inputs.push(&args.corpus);
    inputs.push(&args.pairs);
    if let Some(l) = &args.lexicon {
        inputs.push(l);
    }
    finish_report("relatedness", &report, args.out.as_deref(), args, None, &inputs, inv)
}

pub fn knn(args: &KnnArgs, inv: &Invocation) -> Result<()> {
    let space = load_space(&args.space)?;
    let corpus = load_checked_corpus(&args.corpus, space.rows.nrows())?;
    let mut text = String::from("query\trank\tcaption_id\timage_id\tcosine\n");
    for q in &args.queries {
        let idx = corpus
            .caption_index(q)
            .ok_or_else(|| groundspace::embedstore::StoreError::UnknownCaptionId { line: 0, id: q.clone() })?;
        for n in knn_report(idx, space.rows.view(), &corpus, args.k)? {
            text.push_str(&format!(
                "{q}\t{}\t{}\t{}\t{}\n",
                n.rank, n.caption_id, n.image_id, n.cosine
            ));
        }
    }
    emit(args.out.as_deref(), &text)?;
    if let Some(out) = &args.out {
        let mut inputs: Vec<&Path> = space.inputs.iter().map(PathBuf::as_path).collect();
        inputs.push(&args.corpus);
        RunManifest::new("knn", &inv.argv, args, None, &inputs, &[out])?.write(&sidecar(out))?;
    }
    Ok(())
}

pub fn seq(args: &SeqArgs, inv: &Invocation) -> Result<()> {
    let sentences = load_embeddings(&args.data.sentences)?;
    let images = load_embeddings(&args.data.images)?;
    let corpus = load_corpus(&args.data.corpus)?;
    corpus.check_rows(&sentences, Some(&images))?;
    let model = fit_seq(&sentences, &images, &corpus, args.ridge_lambda)?;
    let grounded = model.embed(&sentences)?;
    save_embeddings(&grounded, &args.out)?;
    let mut outputs: Vec<&Path> = vec![&args.out];
    if let Some(path) = &args.model_out {
        write_file(path, &write_seq_model(&model))?;
        outputs.push(path);
    }
    let inputs: Vec<&Path> = vec![&args.data.sentences, &args.data.images, &args.data.corpus];
    RunManifest::new("seq", &inv.argv, args, None, &inputs, &outputs)?.write(&sidecar(&args.out))
}
