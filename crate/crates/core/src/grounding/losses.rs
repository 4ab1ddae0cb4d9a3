use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::batch::ProjectedBatch;
use super::{CmItem, Gradients, GroundingError, Projection, SimPair, Triplet, MIN_VARIANCE};
use crate::numcore::{cosine, cosine_with_grad, NumError};

/// Weights and margins of the grounding objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha_c: f64,
    pub alpha_p: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha_c: 0.01,
            alpha_p: 0.01,
            gamma: 0.5,
            gamma_prime: 0.5,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), GroundingError> {
        let ok = self.alpha_c >= 0.0
            && self.alpha_p >= 0.0
            && self.gamma > 0.0
            && self.gamma_prime > 0.0
            && [self.alpha_c, self.alpha_p, self.gamma, self.gamma_prime]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(GroundingError::InvalidWeights(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Gradients,
}

/// Value of `alpha_c * L_C + alpha_p * L_P` with its components. A component
/// whose weight is zero is not evaluated and reported as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedLoss {
    pub total: f64,
    pub cluster: Option<f64>,
    pub perceptual: Option<f64>,
    pub grads: Gradients,
}

fn check_rows(index: usize, len: usize) -> Result<(), GroundingError> {
    if index >= len {
        Err(GroundingError::IndexOutOfRange { index, len })
    } else {
        Ok(())
    }
}

/// Adds `weight * sum_t max(0, gamma - cos(a, p) + cos(a, n))` to the batch
/// upstream gradient and returns the unweighted sum.
fn cluster_terms(
    batch: &mut ProjectedBatch<'_>,
    triplets: &[Triplet],
    gamma: f64,
    weight: f64,
) -> Result<f64, GroundingError> {
    let d = batch.dim();
    let (mut ga, mut gb) = (vec![0.0; d], vec![0.0; d]);
    let mut total = 0.0;
    for t in triplets {
        let (sa, sp, sn) = (batch.slot(t.anchor), batch.slot(t.positive), batch.slot(t.negative));
        let pos = cosine(batch.row(sa), batch.row(sp))?;
        let neg = cosine(batch.row(sa), batch.row(sn))?;
        let hinge = gamma - pos + neg;
        // The kink itself (hinge == 0) takes the zero subgradient.
        if hinge <= 0.0 {
            continue;
        }
        total += hinge;
        if weight == 0.0 {
            continue;
        }
        ga.fill(0.0);
        gb.fill(0.0);
        cosine_with_grad(batch.row(sa), batch.row(sp), -weight, &mut ga, &mut gb)?;
        batch.push_grad(sp, &gb);
        gb.fill(0.0);
        cosine_with_grad(batch.row(sa), batch.row(sn), weight, &mut ga, &mut gb)?;
        batch.push_grad(sn, &gb);
        batch.push_grad(sa, &ga);
    }
    Ok(total)
}

/// Pearson correlation of `a` and `b` and its gradient with respect to `a`.
fn pearson_with_grad(a: &[f64], b: &[f64]) -> Result<(f64, Vec<f64>), GroundingError> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let ca: Vec<f64> = a.iter().map(|v| v - mean_a).collect();
    let cb: Vec<f64> = b.iter().map(|v| v - mean_b).collect();
    let saa: f64 = ca.iter().map(|v| v * v).sum();
    let sbb: f64 = cb.iter().map(|v| v * v).sum();
    let sab: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
    if saa / n <= MIN_VARIANCE {
        return Err(GroundingError::DegenerateVariance(format!(
            "textual similarities have variance {:e}",
            saa / n
        )));
    }
    if sbb / n <= MIN_VARIANCE {
        return Err(GroundingError::DegenerateVariance(format!(
            "visual similarities have variance {:e}",
            sbb / n
        )));
    }
    let denom = (saa * sbb).sqrt();
    let rho = sab / denom;
    // d rho / d a_i = B_i / sqrt(S_aa S_bb) - rho * A_i / S_aa (centering terms cancel).
    let grad = ca.iter().zip(&cb).map(|(x, y)| y / denom - rho * x / saa).collect();
    Ok((rho.clamp(-1.0, 1.0), grad))
}

/// Adds `weight * -rho(text sims, image sims)` to the batch upstream
/// gradient and returns `-rho`.
fn perceptual_terms(
    batch: &mut ProjectedBatch<'_>,
    images: ArrayView2<'_, f64>,
    pairs: &[SimPair],
    weight: f64,
) -> Result<f64, GroundingError> {
    if pairs.len() < 2 {
        return Err(GroundingError::InsufficientPairs(format!(
            "a correlation needs at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    let m = images.nrows();
    let mut text = Vec::with_capacity(pairs.len());
    let mut visual = Vec::with_capacity(pairs.len());
    for p in pairs {
        check_rows(p.image1, m)?;
        check_rows(p.image2, m)?;
        text.push(cosine(batch.row(batch.slot(p.k1)), batch.row(batch.slot(p.k2)))?);
        let (v1, v2) = (images.row(p.image1), images.row(p.image2));
        visual.push(cosine(
            v1.as_slice().expect("standard layout"),
            v2.as_slice().expect("standard layout"),
        )?);
    }
    let (rho, drho) = pearson_with_grad(&text, &visual)?;
    if weight != 0.0 {
        let d = batch.dim();
        let (mut g1, mut g2) = (vec![0.0; d], vec![0.0; d]);
        for (p, dr) in pairs.iter().zip(&drho) {
            let (s1, s2) = (batch.slot(p.k1), batch.slot(p.k2));
            g1.fill(0.0);
            g2.fill(0.0);
            cosine_with_grad(batch.row(s1), batch.row(s2), -weight * dr, &mut g1, &mut g2)?;
            batch.push_grad(s1, &g1);
            batch.push_grad(s2, &g2);
        }
    }
    Ok(-rho)
}

fn triplet_rows(triplets: &[Triplet]) -> impl Iterator<Item = usize> + '_ {
    triplets.iter().flat_map(|t| [t.anchor, t.positive, t.negative])
}

fn pair_rows(pairs: &[SimPair]) -> impl Iterator<Item = usize> + '_ {
    pairs.iter().flat_map(|p| [p.k1, p.k2])
}

/// Cluster loss `sum max(0, gamma - cos(g(s), g(s+)) + cos(g(s), g(s-)))`.
pub fn cluster_loss(
    sentences: ArrayView2<'_, f64>,
    projection: Projection<'_>,
    triplets: &[Triplet],
    gamma: f64,
) -> Result<LossOutput, GroundingError> {
    let mut batch = ProjectedBatch::new(sentences, projection, triplet_rows(triplets))?;
    let loss = cluster_terms(&mut batch, triplets, gamma, 1.0)?;
    Ok(LossOutput {
        loss,
        grads: batch.into_gradients()?,
    })
}

/// Perceptual loss `-rho({cos(g(s_k1), g(s_k2))}, {cos(i_k1, i_k2)})`.
pub fn perceptual_loss(
    sentences: ArrayView2<'_, f64>,
    images: ArrayView2<'_, f64>,
    projection: Projection<'_>,
    pairs: &[SimPair],
) -> Result<LossOutput, GroundingError> {
    let mut batch = ProjectedBatch::new(sentences, projection, pair_rows(pairs))?;
    let loss = perceptual_terms(&mut batch, images, pairs, 1.0)?;
    Ok(LossOutput {
        loss,
        grads: batch.into_gradients()?,
    })
}

/// `alpha_c * L_C + alpha_p * L_P`, sharing one forward pass over the rows
/// touched by either component.
pub fn grounded_loss(
    sentences: ArrayView2<'_, f64>,
    images: ArrayView2<'_, f64>,
    projection: Projection<'_>,
    triplets: &[Triplet],
    pairs: &[SimPair],
    weights: &LossWeights,
) -> Result<GroundedLoss, GroundingError> {
    weights.validate()?;
    let use_c = weights.alpha_c != 0.0;
    let use_p = weights.alpha_p != 0.0;
    let rows = triplet_rows(if use_c { triplets } else { &[] }).chain(pair_rows(if use_p { pairs } else { &[] }));
    let mut batch = ProjectedBatch::new(sentences, projection, rows)?;
    let cluster = if use_c {
        Some(cluster_terms(&mut batch, triplets, weights.gamma, weights.alpha_c)?)
    } else {
        None
    };
    let perceptual = if use_p {
        Some(perceptual_terms(&mut batch, images, pairs, weights.alpha_p)?)
    } else {
        None
    };
    let total = weights.alpha_c * cluster.unwrap_or(0.0) + weights.alpha_p * perceptual.unwrap_or(0.0);
    Ok(GroundedLoss {
        total,
        cluster,
        perceptual,
        grads: batch.into_gradients()?,
    })
}

/// Cross-modal projection loss `sum max(0, gamma' + cos(f(s), i-) - cos(f(s), i_s))`.
pub fn cm_loss(
    sentences: ArrayView2<'_, f64>,
    images: ArrayView2<'_, f64>,
    projection: Projection<'_>,
    items: &[CmItem],
    gamma_prime: f64,
) -> Result<LossOutput, GroundingError> {
    let out_dim = projection.projector().map_or(sentences.ncols(), |p| p.d_out());
    if out_dim != images.ncols() {
        return Err(NumError::ShapeMismatch(format!(
            "projection emits {out_dim} dims but images have {}",
            images.ncols()
        ))
        .into());
    }
    let mut batch = ProjectedBatch::new(sentences, projection, items.iter().map(|it| it.sentence))?;
    let m = images.nrows();
    let d = batch.dim();
    let (mut gs, mut scratch) = (vec![0.0; d], vec![0.0; d]);
    let mut loss = 0.0;
    for it in items {
        check_rows(it.image, m)?;
        check_rows(it.negative_image, m)?;
        let slot = batch.slot(it.sentence);
        let pos_img = images.row(it.image);
        let neg_img = images.row(it.negative_image);
        let pos_img = pos_img.as_slice().expect("standard layout");
        let neg_img = neg_img.as_slice().expect("standard layout");
        let pos = cosine(batch.row(slot), pos_img)?;
        let neg = cosine(batch.row(slot), neg_img)?;
        let hinge = gamma_prime + neg - pos;
        if hinge <= 0.0 {
            continue;
        }
        loss += hinge;
        gs.fill(0.0);
        cosine_with_grad(batch.row(slot), neg_img, 1.0, &mut gs, &mut scratch)?;
        cosine_with_grad(batch.row(slot), pos_img, -1.0, &mut gs, &mut scratch)?;
        batch.push_grad(slot, &gs);
    }
    Ok(LossOutput {
        loss,
        grads: batch.into_gradients()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn satisfied_margin_contributes_nothing() {
        // cos+ = 0.9, cos- = 0.1
        let s = array![[1.0, 0.0], [0.9, (1.0f64 - 0.81).sqrt()], [0.1, (1.0f64 - 0.01).sqrt()]];
        let t = [Triplet {
            anchor: 0,
            positive: 1,
            negative: 2,
        }];
        let out = cluster_loss(s.view(), Projection::Identity, &t, 0.5).unwrap();
        assert!(out.loss.abs() < 1e-12);
        assert!(out.grads.rows.values().all(|g| g.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn violated_margin_is_hinge_value() {
        // cos+ = 0.2, cos- = 0.4 -> 0.5 - 0.2 + 0.4 = 0.7
        let s = array![[1.0, 0.0], [0.2, (1.0f64 - 0.04).sqrt()], [0.4, (1.0f64 - 0.16).sqrt()]];
        let t = [Triplet {
            anchor: 0,
            positive: 1,
            negative: 2,
        }];
        let out = cluster_loss(s.view(), Projection::Identity, &t, 0.5).unwrap();
        assert!((out.loss - 0.7).abs() < 1e-12);
    }

    #[test]
    fn cm_hinge_cases() {
        let images = array![[1.0, 0.0], [0.0, 1.0]];
        let item = [CmItem {
            sentence: 0,
            image: 0,
            negative_image: 1,
        }];
        // f(s) = i_s, i- orthogonal: max(0, 0.5 + 0 - 1) = 0
        let s = array![[1.0, 0.0]];
        let out = cm_loss(s.view(), images.view(), Projection::Identity, &item, 0.5).unwrap();
        assert_eq!(out.loss, 0.0);
        // f(s) orthogonal to i_s and equal to i-: 0.5 + 1 - 0 = 1.5
        let s = array![[0.0, 1.0]];
        let out = cm_loss(s.view(), images.view(), Projection::Identity, &item, 0.5).unwrap();
        assert!((out.loss - 1.5).abs() < 1e-15);
    }

    #[test]
    fn cm_rejects_dimension_mismatch() {
        let images = array![[1.0, 0.0, 0.0]];
        let s = array![[1.0, 0.0]];
        let item = [CmItem {
            sentence: 0,
            image: 0,
            negative_image: 0,
        }];
        assert!(matches!(
            cm_loss(s.view(), images.view(), Projection::Identity, &item, 0.5),
            Err(GroundingError::Numeric(NumError::ShapeMismatch(_)))
        ));
    }

    #[test]
    fn perceptual_extremes() {
        // Text and visual similarity sequences identical -> loss -1.
        let v = array![[1.0, 0.0], [0.6, 0.8], [0.0, 1.0], [-0.6, 0.8]];
        let pairs: Vec<SimPair> = [(0, 1), (0, 2), (1, 3), (0, 3)]
            .iter()
            .map(|&(a, b)| SimPair {
                k1: a,
                k2: b,
                image1: a,
                image2: b,
            })
            .collect();
        let out = perceptual_loss(v.view(), v.view(), Projection::Identity, &pairs).unwrap();
        assert!((out.loss + 1.0).abs() < 1e-12);
        for g in out.grads.rows.values() {
            assert!(g.iter().all(|x| x.abs() < 1e-12));
        }
        // Odd rows flipped and every pair joins an odd and an even row, so
        // each visual similarity is the negated textual one -> loss +1.
        let img = array![[1.0, 0.0], [-0.6, -0.8], [0.0, 1.0], [0.6, -0.8]];
        let pairs: Vec<SimPair> = [(0, 1), (0, 3), (2, 1), (2, 3)]
            .iter()
            .map(|&(a, b)| SimPair {
                k1: a,
                k2: b,
                image1: a,
                image2: b,
            })
            .collect();
        let out = perceptual_loss(v.view(), img.view(), Projection::Identity, &pairs).unwrap();
        assert!((out.loss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_visual_similarity_is_degenerate() {
        let s = array![[1.0, 0.0], [0.6, 0.8], [0.0, 1.0]];
        let img = array![[1.0, 0.0]];
        let pairs = [
            SimPair {
                k1: 0,
                k2: 1,
                image1: 0,
                image2: 0,
            },
            SimPair {
                k1: 1,
                k2: 2,
                image1: 0,
                image2: 0,
            },
        ];
        assert!(matches!(
            perceptual_loss(s.view(), img.view(), Projection::Identity, &pairs),
            Err(GroundingError::DegenerateVariance(_))
        ));
    }

    #[test]
    fn weights_validated() {
        let w = LossWeights {
            gamma: 0.0,
            ..LossWeights::default()
        };
        assert!(w.validate().is_err());
        assert!(LossWeights::default().validate().is_ok());
    }
}
