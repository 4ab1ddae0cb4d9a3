//! Test-only reference implementations. Everything here is written
//! straight from the definitions with plain loops and no shared code with
//! the library's numeric paths.
#![allow(dead_code, clippy::needless_range_loop)]

use groundspace::grounding::{Gradients, Projection};
use groundspace::numcore::GroundedProjector;
use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

pub const FD_STEP: f64 = 1e-6;

pub fn normal_matrix<R: Rng>(rng: &mut R, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.sample(StandardNormal))
}

pub fn uniform_matrix<R: Rng>(rng: &mut R, n: usize, d: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(-scale..scale))
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn cos(x: &[f64], y: &[f64]) -> f64 {
    dot(x, y) / (dot(x, x).sqrt() * dot(y, y).sqrt())
}

pub fn row(a: &Array2<f64>, i: usize) -> Vec<f64> {
    a.row(i).to_vec()
}

/// `tanh(x W1 + b1) W2 + b2` with explicit loops.
pub fn mlp_apply(p: &GroundedProjector, x: &[f64]) -> Vec<f64> {
    let (d_in, d_h) = p.w1.dim();
    let d_out = p.w2.ncols();
    let mut hidden = vec![0.0; d_h];
    for j in 0..d_h {
        let mut acc = p.b1[j];
        for i in 0..d_in {
            acc += x[i] * p.w1[[i, j]];
        }
        hidden[j] = acc.tanh();
    }
    (0..d_out)
        .map(|o| p.b2[o] + (0..d_h).map(|j| hidden[j] * p.w2[[j, o]]).sum::<f64>())
        .collect()
}

pub fn project_rows(p: Option<&GroundedProjector>, s: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..s.nrows())
        .map(|i| match p {
            Some(p) => mlp_apply(p, &row(s, i)),
            None => row(s, i),
        })
        .collect()
}

/// Textbook two-pass Pearson.
pub fn pearson_two_pass(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

/// Average ranks by counting: `1 + #smaller + (#equal - 1) / 2`.
pub fn ranks_by_counting(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    pearson_two_pass(&ranks_by_counting(x), &ranks_by_counting(y))
}

/// Indices of the `k` rows most cosine-similar to row `q` (self excluded),
/// by full sort on (descending cosine, ascending index).
pub fn brute_top_k(rows: &[Vec<f64>], q: usize, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..rows.len())
        .filter(|&j| j != q)
        .map(|j| (j, cos(&rows[q], &rows[j])))
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn mnno_oracle(space: &[Vec<f64>], images: &[Vec<f64>], image_of: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..space.len() {
        let v = image_of[c];
        let mut caption_imgs: Vec<usize> = brute_top_k(space, c, k).iter().map(|&(j, _)| image_of[j]).collect();
        caption_imgs.sort_unstable();
        caption_imgs.dedup();
        let visual: Vec<usize> = brute_top_k(images, v, k).iter().map(|&(j, _)| j).collect();
        let shared = caption_imgs.iter().filter(|i| visual.contains(i)).count();
        total += shared as f64 / k as f64;
    }
    total / space.len() as f64
}

/// `(c_intra, c_inter)` in percent over every unordered pair.
pub fn cluster_stats_oracle(space: &[Vec<f64>], image_of: &[usize]) -> (f64, f64) {
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    for a in 0..space.len() {
        for b in a + 1..space.len() {
            let c = cos(&space[a], &space[b]);
            if image_of[a] == image_of[b] {
                intra += c;
                n_intra += 1;
            } else {
                inter += c;
                n_inter += 1;
            }
        }
    }
    (100.0 * intra / n_intra as f64, 100.0 * inter / n_inter as f64)
}

/// Pearson over every cross-image caption pair.
pub fn rho_vis_oracle(space: &[Vec<f64>], images: &[Vec<f64>], image_of: &[usize]) -> f64 {
    let (mut text, mut vis) = (Vec::new(), Vec::new());
    for a in 0..space.len() {
        for b in a + 1..space.len() {
            if image_of[a] != image_of[b] {
                text.push(cos(&space[a], &space[b]));
                vis.push(cos(&images[image_of[a]], &images[image_of[b]]));
            }
        }
    }
    pearson_two_pass(&text, &vis)
}

/// Flattened gradient: projector tensors in declared order, then every
/// sentence row (zeros for rows without an entry).
pub fn flatten(grads: &Gradients, n: usize, d: usize) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some(p) = &grads.projector {
        for t in p.tensors() {
            out.extend_from_slice(t);
        }
    }
    out.extend(grads.dense_rows(n, d).iter().copied());
    out
}

/// Central differences of `loss` over every projector parameter and every
/// sentence entry, in the layout of [`flatten`].
pub fn fd_gradient(
    sentences: &Array2<f64>,
    projector: Option<&GroundedProjector>,
    loss: &dyn Fn(&Array2<f64>, Option<&GroundedProjector>) -> f64,
    with_rows: bool,
) -> Vec<f64> {
    let h = FD_STEP;
    let mut out = Vec::new();
    if let Some(p) = projector {
        for t in 0..4 {
            let len = p.tensors()[t].len();
            for i in 0..len {
                let mut plus = p.clone();
                plus.tensors_mut()[t][i] += h;
                let mut minus = p.clone();
                minus.tensors_mut()[t][i] -= h;
                out.push((loss(sentences, Some(&plus)) - loss(sentences, Some(&minus))) / (2.0 * h));
            }
        }
    }
    let (n, d) = sentences.dim();
    for r in 0..n {
        for c in 0..d {
            if !with_rows {
                out.push(0.0);
                continue;
            }
            let mut plus = sentences.clone();
            plus[[r, c]] += h;
            let mut minus = sentences.clone();
            minus[[r, c]] -= h;
            out.push((loss(&plus, projector) - loss(&minus, projector)) / (2.0 * h));
        }
    }
    out
}

/// `||a - b|| / max(||a||, ||b||)`, with the denominator floored at 1e-8 so
/// two vanishing gradients compare by absolute difference.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    diff / na.max(nb).max(1e-8)
}

pub fn projection(p: Option<&GroundedProjector>, input_grads: bool) -> Projection<'_> {
    match p {
        Some(projector) => Projection::Mlp { projector, input_grads },
        None => Projection::Identity,
    }
}

/// Ridge regression by plain gradient descent on the mean objective
/// `(1/n) (sum ||x W + b - y||^2 + lambda ||W||^2)`.
pub fn ridge_by_gradient_descent(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    lambda: f64,
    steps: usize,
    lr: f64,
) -> (Array2<f64>, Array1<f64>) {
    let (n, d) = x.dim();
    let m = y.ncols();
    let mut w = Array2::<f64>::zeros((d, m));
    let mut b = Array1::<f64>::zeros(m);
    for _ in 0..steps {
        let resid = x.dot(&w) + &b - y;
        let gw = (x.t().dot(&resid) * 2.0 + &w * (2.0 * lambda)) / n as f64;
        let gb = resid.sum_axis(ndarray::Axis(0)) * (2.0 / n as f64);
        w = w - gw * lr;
        b = b - gb * lr;
    }
    (w, b)
}

/// Top `m` covariance eigenvectors by power iteration with deflation.
pub fn power_iteration_components(data: ArrayView2<'_, f64>, m: usize, iters: usize) -> Vec<Vec<f64>> {
    let (n, d) = data.dim();
    let mean: Vec<f64> = (0..d).map(|j| data.column(j).sum() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in 0..n {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (data[[r, i]] - mean[i]) * (data[[r, j]] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    let mut comps = Vec::new();
    for c in 0..m {
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + ((i * 7 + c * 3) % 5) as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..iters {
            let mut w: Vec<f64> = (0..d).map(|i| dot(&cov[i], &v)).collect();
            let norm = dot(&w, &w).sqrt();
            for x in &mut w {
                *x /= norm;
            }
            lambda = norm;
            v = w;
        }
        for i in 0..d {
            for j in 0..d {
                cov[i][j] -= lambda * v[i] * v[j];
            }
        }
        comps.push(v);
    }
    comps
}

use groundspace::embedstore::CaptionCorpus;
use groundspace::grounding::{CmItem, SimPair, Triplet};

/// A small random corpus with embeddings, a projector and loss inputs.
pub struct Problem {
    pub corpus: CaptionCorpus,
    pub image_of: Vec<usize>,
    pub sentences: Array2<f64>,
    pub images: Array2<f64>,
    pub projector: GroundedProjector,
    pub cm_projector: GroundedProjector,
    pub triplets: Vec<Triplet>,
    pub pairs: Vec<SimPair>,
    pub items: Vec<CmItem>,
}

pub fn random_problem<R: Rng>(rng: &mut R) -> Problem {
    let m = rng.random_range(3..6);
    let mut caption_ids = Vec::new();
    let mut image_of = Vec::new();
    for v in 0..m {
        for j in 0..rng.random_range(2..4) {
            caption_ids.push(format!("c{v}_{j}"));
            image_of.push(v);
        }
    }
    let n = caption_ids.len();
    let image_ids = (0..m).map(|v| format!("i{v}")).collect();
    let corpus = CaptionCorpus::new(caption_ids, image_ids, image_of.clone(), vec![None; n]).expect("valid corpus");
    let d_t = rng.random_range(3..6);
    let d_i = rng.random_range(3..6);
    let d_h = rng.random_range(3..7);
    let d_g = rng.random_range(3..6);
    let sentences = normal_matrix(rng, n, d_t);
    let images = normal_matrix(rng, m, d_i);
    let projector = GroundedProjector::init(d_t, d_h, d_g, rng);
    let cm_projector = GroundedProjector::init(d_t, d_h, d_i, rng);

    let mut triplets = Vec::new();
    for _ in 0..rng.random_range(3..9) {
        let anchor = rng.random_range(0..n);
        let mates: Vec<usize> = (0..n)
            .filter(|&c| c != anchor && image_of[c] == image_of[anchor])
            .collect();
        let others: Vec<usize> = (0..n).filter(|&c| image_of[c] != image_of[anchor]).collect();
        triplets.push(Triplet {
            anchor,
            positive: mates[rng.random_range(0..mates.len())],
            negative: others[rng.random_range(0..others.len())],
        });
    }
    let mut all_pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if image_of[a] != image_of[b] {
                all_pairs.push((a, b));
            }
        }
    }
    let count = rng.random_range(4..10).min(all_pairs.len());
    let mut pairs = Vec::new();
    while pairs.len() < count {
        let (a, b) = all_pairs.swap_remove(rng.random_range(0..all_pairs.len()));
        pairs.push(SimPair {
            k1: a,
            k2: b,
            image1: image_of[a],
            image2: image_of[b],
        });
    }
    let items = (0..rng.random_range(3..8))
        .map(|_| {
            let s = rng.random_range(0..n);
            let mut neg = rng.random_range(0..m - 1);
            if neg >= image_of[s] {
                neg += 1;
            }
            CmItem {
                sentence: s,
                image: image_of[s],
                negative_image: neg,
            }
        })
        .collect();
    Problem {
        corpus,
        image_of,
        sentences,
        images,
        projector,
        cm_projector,
        triplets,
        pairs,
        items,
    }
}

pub fn cluster_oracle(rows: &[Vec<f64>], triplets: &[Triplet], gamma: f64) -> f64 {
    triplets
        .iter()
        .map(|t| (gamma - cos(&rows[t.anchor], &rows[t.positive]) + cos(&rows[t.anchor], &rows[t.negative])).max(0.0))
        .sum()
}

/// Smallest distance of any hinge argument from its kink.
pub fn cluster_kink_gap(rows: &[Vec<f64>], triplets: &[Triplet], gamma: f64) -> f64 {
    triplets
        .iter()
        .map(|t| (gamma - cos(&rows[t.anchor], &rows[t.positive]) + cos(&rows[t.anchor], &rows[t.negative])).abs())
        .fold(f64::INFINITY, f64::min)
}

pub fn perceptual_oracle(rows: &[Vec<f64>], images: &Array2<f64>, pairs: &[SimPair]) -> f64 {
    let text: Vec<f64> = pairs.iter().map(|p| cos(&rows[p.k1], &rows[p.k2])).collect();
    let vis: Vec<f64> = pairs
        .iter()
        .map(|p| cos(&row(images, p.image1), &row(images, p.image2)))
        .collect();
    -pearson_two_pass(&text, &vis)
}

pub fn cm_oracle(rows: &[Vec<f64>], images: &Array2<f64>, items: &[CmItem], gamma_prime: f64) -> f64 {
    items
        .iter()
        .map(|it| {
            (gamma_prime + cos(&rows[it.sentence], &row(images, it.negative_image))
                - cos(&rows[it.sentence], &row(images, it.image)))
            .max(0.0)
        })
        .sum()
}

pub fn cm_kink_gap(rows: &[Vec<f64>], images: &Array2<f64>, items: &[CmItem], gamma_prime: f64) -> f64 {
    items
        .iter()
        .map(|it| {
            (gamma_prime + cos(&rows[it.sentence], &row(images, it.negative_image))
                - cos(&rows[it.sentence], &row(images, it.image)))
            .abs()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random corpus of at most `max_captions` captions over 3.. images.
pub fn random_corpus<R: Rng>(rng: &mut R, max_captions: usize) -> (CaptionCorpus, Vec<usize>) {
    let mut image_of = Vec::new();
    let mut v = 0;
    loop {
        let size = rng.random_range(1..5);
        if image_of.len() + size > max_captions {
            break;
        }
        image_of.extend(std::iter::repeat_n(v, size));
        v += 1;
    }
    let m = v;
    assert!(m >= 3, "max_captions too small");
    let n = image_of.len();
    let corpus = CaptionCorpus::new(
        (0..n).map(|c| format!("c{c}")).collect(),
        (0..m).map(|k| format!("i{k}")).collect(),
        image_of.clone(),
        vec![None; n],
    )
    .expect("valid corpus");
    (corpus, image_of)
}

pub fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| row(a, i)).collect()
}

/// A loss under test: value and gradients at `sentences` through a projection.
pub type LossFn<'a> = dyn Fn(&Array2<f64>, Projection<'_>) -> (f64, Gradients) + 'a;
