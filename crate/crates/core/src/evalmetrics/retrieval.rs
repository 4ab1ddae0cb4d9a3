use ndarray::ArrayView2;
use serde::Serialize;

use super::structure::{top_k, unit_rows};
use super::{pearson, spearman, MetricError};
use crate::embedstore::{CaptionCorpus, RelatednessPair};
use crate::numcore::cosine;

/// One row of a nearest-neighbour listing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub rank: usize,
    pub caption_index: usize,
    pub caption_id: String,
    pub image_id: String,
    pub cosine: f64,
}

/// The `k` captions closest to `query` by cosine, in descending order with
/// ties broken by caption index; the query itself is excluded.
pub fn knn_report(
    query: usize,
    space: ArrayView2<'_, f64>,
    corpus: &CaptionCorpus,
    k: usize,
) -> Result<Vec<Neighbor>, MetricError> {
    let n = space.nrows();
    if n != corpus.num_captions() {
        return Err(MetricError::ShapeMismatch(format!(
            "space has {n} rows for {} captions",
            corpus.num_captions()
        )));
    }
    if query >= n {
        return Err(MetricError::IndexOutOfRange { index: query, len: n });
    }
    if k == 0 || k >= n {
        return Err(MetricError::InvalidK {
            k,
            max: n.saturating_sub(1),
        });
    }
    let unit = unit_rows(space)?;
    Ok(top_k(&unit, query, k)
        .into_iter()
        .enumerate()
        .map(|(i, (c, cos))| Neighbor {
            rank: i + 1,
            caption_index: c,
            caption_id: corpus.caption_id(c).to_string(),
            image_id: corpus.image_id(corpus.image_of(c)).to_string(),
            cosine: cos,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelatednessScores {
    pub spearman: f64,
    pub pearson: f64,
    pub pairs: usize,
}

fn pair_cosines(space: ArrayView2<'_, f64>, pairs: &[RelatednessPair]) -> Result<Vec<f64>, MetricError> {
    let n = space.nrows();
    pairs
        .iter()
        .map(|p| {
            for index in [p.index_a, p.index_b] {
                if index >= n {
                    return Err(MetricError::IndexOutOfRange { index, len: n });
                }
            }
            let (a, b) = (space.row(p.index_a), space.row(p.index_b));
            let (a, b) = (a.to_vec(), b.to_vec());
            cosine(&a, &b).map_err(|_| MetricError::ZeroNorm { row: p.index_a })
        })
        .collect()
}

/// Spearman correlation between pair cosines and gold scores.
pub fn relatedness(space: ArrayView2<'_, f64>, pairs: &[RelatednessPair]) -> Result<f64, MetricError> {
    let cos = pair_cosines(space, pairs)?;
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold_score).collect();
    spearman(&cos, &gold)
}

/// Spearman and Pearson relatedness in one pass.
pub fn relatedness_scores(
    space: ArrayView2<'_, f64>,
    pairs: &[RelatednessPair],
) -> Result<RelatednessScores, MetricError> {
    let cos = pair_cosines(space, pairs)?;
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold_score).collect();
    Ok(RelatednessScores {
        spearman: spearman(&cos, &gold)?,
        pearson: pearson(&cos, &gold)?,
        pairs: pairs.len(),
    })
}
