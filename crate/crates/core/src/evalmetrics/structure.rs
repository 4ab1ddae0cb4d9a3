use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;

use super::{pearson, MetricError};
use crate::embedstore::CaptionCorpus;
use crate::grounding::{max_pairs, sample_pairs};
use crate::numcore::COSINE_EPS;
use crate::rng::stream_rng;

/// Above this many different-image pairs `c_inter` is estimated from a
/// seeded sample of this size.
pub const INTER_PAIR_BUDGET: usize = 1_000_000;

/// Percent-scaled mean cosines within and across clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    pub c_intra: f64,
    pub c_inter: f64,
}

/// Rows scaled to unit length.
pub fn unit_rows(x: ArrayView2<'_, f64>) -> Result<Array2<f64>, MetricError> {
    let mut out = x.as_standard_layout().into_owned();
    for (row, mut r) in out.rows_mut().into_iter().enumerate() {
        let norm = r.dot(&r).sqrt();
        if norm < COSINE_EPS {
            return Err(MetricError::ZeroNorm { row });
        }
        r /= norm;
    }
    Ok(out)
}

fn row(x: &Array2<f64>, i: usize) -> &[f64] {
    let d = x.ncols();
    &x.as_slice().expect("standard layout")[i * d..(i + 1) * d]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Indices of the `k` rows most similar to row `q` (excluding `q`), by
/// descending cosine with ties broken by lower index.
pub(crate) fn top_k(unit: &Array2<f64>, q: usize, k: usize) -> Vec<(usize, f64)> {
    let query = row(unit, q);
    let mut sims: Vec<(usize, f64)> = (0..unit.nrows())
        .filter(|&j| j != q)
        .map(|j| (j, dot(query, row(unit, j)).clamp(-1.0, 1.0)))
        .collect();
    let order = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    };
    if k < sims.len() {
        sims.select_nth_unstable_by(k, order);
        sims.truncate(k);
    }
    sims.sort_by(order);
    sims
}

fn check_space(space: ArrayView2<'_, f64>, corpus: &CaptionCorpus) -> Result<(), MetricError> {
    if space.nrows() != corpus.num_captions() {
        return Err(MetricError::ShapeMismatch(format!(
            "space has {} rows for {} captions",
            space.nrows(),
            corpus.num_captions()
        )));
    }
    Ok(())
}

fn check_images(images: ArrayView2<'_, f64>, corpus: &CaptionCorpus) -> Result<(), MetricError> {
    if images.nrows() != corpus.num_images() {
        return Err(MetricError::ShapeMismatch(format!(
            "{} image rows for {} images",
            images.nrows(),
            corpus.num_images()
        )));
    }
    Ok(())
}

/// Mean nearest-neighbour overlap in `[0, 1]`.
///
/// For caption `c` of image `v`, the `k` nearest captions of `c` (excluding
/// `c`) are mapped to their image ids; the `k` nearest images of `v`
/// (excluding `v`) are taken in the visual space; the score of `c` is the
/// size of the intersection of the two image-id sets divided by `k`.
pub fn mnno(
    space: ArrayView2<'_, f64>,
    images: ArrayView2<'_, f64>,
    corpus: &CaptionCorpus,
    k: usize,
) -> Result<f64, MetricError> {
    check_space(space, corpus)?;
    check_images(images, corpus)?;
    let m = corpus.num_images();
    if k == 0 || k >= m {
        return Err(MetricError::InvalidK {
            k,
            max: m.saturating_sub(1),
        });
    }
    let captions = unit_rows(space)?;
    let visual = unit_rows(images)?;
    let image_nn: Vec<Vec<bool>> = (0..m)
        .into_par_iter()
        .map(|v| {
            let mut member = vec![false; m];
            for (j, _) in top_k(&visual, v, k) {
                member[j] = true;
            }
            member
        })
        .collect();
    let scores: Vec<f64> = (0..corpus.num_captions())
        .into_par_iter()
        .map(|c| {
            let v = corpus.image_of(c);
            let mut hit = vec![false; m];
            let mut shared = 0usize;
            for (j, _) in top_k(&captions, c, k) {
                let img = corpus.image_of(j);
                if !hit[img] {
                    hit[img] = true;
                    if image_nn[v][img] {
                        shared += 1;
                    }
                }
            }
            shared as f64 / k as f64
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Pearson correlation between `cos(s, s')` and `cos(v_s, v_s')` over
/// different-image caption pairs. All such pairs are used when `n_pairs`
/// covers them; otherwise `n_pairs` distinct pairs are drawn with `seed`.
pub fn rho_vis(
    space: ArrayView2<'_, f64>,
    images: ArrayView2<'_, f64>,
    corpus: &CaptionCorpus,
    n_pairs: usize,
    seed: u64,
) -> Result<f64, MetricError> {
    check_space(space, corpus)?;
    check_images(images, corpus)?;
    if corpus.num_images() < 2 {
        return Err(MetricError::EmptyExpectation(
            "rho_vis needs at least two images".into(),
        ));
    }
    let captions = unit_rows(space)?;
    let visual = unit_rows(images)?;
    let total = max_pairs(corpus, false);
    let pairs: Vec<(usize, usize)> = if n_pairs as u64 >= total {
        let n = corpus.num_captions();
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| corpus.image_of(a) != corpus.image_of(b))
            .collect()
    } else {
        let mut rng = stream_rng(seed, 0x7276);
        sample_pairs(corpus, n_pairs, false, &mut rng)
            .map_err(|e| MetricError::EmptyExpectation(e.to_string()))?
            .into_iter()
            .map(|p| (p.k1, p.k2))
            .collect()
    };
    let (text, vis): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .map(|&(a, b)| {
            (
                dot(row(&captions, a), row(&captions, b)).clamp(-1.0, 1.0),
                dot(row(&visual, corpus.image_of(a)), row(&visual, corpus.image_of(b))).clamp(-1.0, 1.0),
            )
        })
        .unzip();
    pearson(&text, &vis)
}

/// `c_intra` over every same-image pair and `c_inter` over every
/// different-image pair (or a seeded sample of [`INTER_PAIR_BUDGET`] pairs
/// when there are more).
pub fn cluster_stats(
    space: ArrayView2<'_, f64>,
    corpus: &CaptionCorpus,
    seed: u64,
) -> Result<ClusterStats, MetricError> {
    check_space(space, corpus)?;
    if !corpus.has_multi_caption_cluster() {
        return Err(MetricError::EmptyExpectation(
            "c_intra needs a cluster with at least two captions".into(),
        ));
    }
    if corpus.num_images() < 2 {
        return Err(MetricError::EmptyExpectation(
            "c_inter needs at least two clusters".into(),
        ));
    }
    let unit = unit_rows(space)?;
    let cos = |a: usize, b: usize| dot(row(&unit, a), row(&unit, b)).clamp(-1.0, 1.0);

    let intra_parts: Vec<(f64, usize)> = corpus
        .clusters()
        .par_iter()
        .map(|cluster| {
            let mut sum = 0.0;
            let mut count = 0;
            for (i, &a) in cluster.iter().enumerate() {
                for &b in &cluster[i + 1..] {
                    sum += cos(a, b);
                    count += 1;
                }
            }
            (sum, count)
        })
        .collect();
    let (intra_sum, intra_n) = intra_parts
        .iter()
        .fold((0.0, 0usize), |(s, n), &(ps, pn)| (s + ps, n + pn));

    let n = corpus.num_captions();
    let total_inter = max_pairs(corpus, false);
    let (inter_sum, inter_n) = if total_inter <= INTER_PAIR_BUDGET as u64 {
        let parts: Vec<(f64, usize)> = (0..n)
            .into_par_iter()
            .map(|a| {
                let img = corpus.image_of(a);
                let mut sum = 0.0;
                let mut count = 0;
                for b in a + 1..n {
                    if corpus.image_of(b) != img {
                        sum += cos(a, b);
                        count += 1;
                    }
                }
                (sum, count)
            })
            .collect();
        parts.iter().fold((0.0, 0usize), |(s, c), &(ps, pc)| (s + ps, c + pc))
    } else {
        let mut rng = stream_rng(seed, 0x6369);
        let mut sum = 0.0;
        let mut drawn = 0;
        while drawn < INTER_PAIR_BUDGET {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if corpus.image_of(a) == corpus.image_of(b) {
                continue;
            }
            sum += cos(a, b);
            drawn += 1;
        }
        (sum, drawn)
    };
    Ok(ClusterStats {
        c_intra: 100.0 * intra_sum / intra_n as f64,
        c_inter: 100.0 * inter_sum / inter_n as f64,
    })
}
