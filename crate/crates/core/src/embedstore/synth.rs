use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::{CaptionCorpus, EmbeddingMatrix, Precision, StoreError};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub n_clusters: usize,
    pub captions_per_cluster: usize,
    pub d_t: usize,
    pub d_i: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_clusters: 200,
            captions_per_cluster: 5,
            d_t: 64,
            d_i: 32,
            noise_sigma: 0.4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub sentences: EmbeddingMatrix,
    pub images: EmbeddingMatrix,
    pub corpus: CaptionCorpus,
}

/// Generates a clustered caption/image corpus.
///
/// Image `k` is a random unit prototype in `d_i` dimensions. A single
/// random linear map `M` (`d_t x d_i`, standard normal entries) is drawn per
/// dataset and each caption of image `k` is `M p_k + e` with
/// `e ~ N(0, noise_sigma^2 I)`, so caption geometry inherits the image
/// geometry through `M`.
pub fn gen_synthetic(params: &SynthParams) -> Result<SyntheticData, StoreError> {
    let SynthParams {
        n_clusters,
        captions_per_cluster,
        d_t,
        d_i,
        noise_sigma,
        seed,
    } = *params;
    if n_clusters == 0 || captions_per_cluster == 0 || d_t == 0 || d_i == 0 {
        return Err(StoreError::InvalidParam(
            "cluster count, captions per cluster and dimensions must be positive".into(),
        ));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(StoreError::InvalidParam(format!(
            "noise_sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let map = Array2::from_shape_fn((d_t, d_i), |_| normal());
    let mut images = Array2::<f64>::zeros((n_clusters, d_i));
    for mut row in images.rows_mut() {
        loop {
            row.mapv_inplace(|_| normal());
            let norm = row.dot(&row).sqrt();
            if norm > 1e-8 {
                row /= norm;
                break;
            }
        }
    }

    let n = n_clusters * captions_per_cluster;
    let mut sentences = Array2::<f64>::zeros((n, d_t));
    let mut caption_ids = Vec::with_capacity(n);
    let mut caption_to_image = Vec::with_capacity(n);
    for k in 0..n_clusters {
        let projected = map.dot(&images.row(k));
        for j in 0..captions_per_cluster {
            let c = k * captions_per_cluster + j;
            let mut row = sentences.row_mut(c);
            for (dst, &src) in row.iter_mut().zip(projected.iter()) {
                *dst = src + noise_sigma * normal();
            }
            caption_ids.push(format!("c{k}_{j}"));
            caption_to_image.push(k);
        }
    }
    let image_ids = (0..n_clusters).map(|k| format!("img{k}")).collect();
    let corpus = CaptionCorpus::new(caption_ids, image_ids, caption_to_image, vec![])?;
    Ok(SyntheticData {
        sentences: EmbeddingMatrix::new(sentences, Precision::F64)?,
        images: EmbeddingMatrix::new(images, Precision::F64)?,
        corpus,
    })
}
