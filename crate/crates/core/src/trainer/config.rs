use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::evalmetrics::MetricOptions;
use crate::grounding::LossWeights;

/// Which objective a run optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Cluster loss only.
    C,
    /// Perceptual loss only.
    P,
    /// Both, weighted by `alpha_c` and `alpha_p`.
    CP,
    /// Cross-modal projection baseline.
    CM,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::C, Scenario::P, Scenario::CP, Scenario::CM];

    pub fn uses_cluster(self) -> bool {
        matches!(self, Scenario::C | Scenario::CP)
    }

    pub fn uses_perceptual(self) -> bool {
        matches!(self, Scenario::P | Scenario::CP)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::C => "c",
            Scenario::P => "p",
            Scenario::CP => "cp",
            Scenario::CM => "cm",
        })
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(Scenario::C),
            "p" => Ok(Scenario::P),
            "cp" | "c+p" => Ok(Scenario::CP),
            "cm" => Ok(Scenario::CM),
            other => Err(format!("unknown scenario {other:?} (expected c, p, cp or cm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub scenario: Scenario,
    /// `g` is a 2-layer MLP when set, the identity otherwise.
    pub grounded_space: bool,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub alpha_c: f64,
    pub alpha_p: f64,
    pub lr: f64,
    /// Output width of `g`. CM projects into the image space instead.
    pub d_g: usize,
    pub d_h: usize,
    /// Anchors per batch.
    pub batch_triplets: usize,
    /// Similarity pairs per batch for the perceptual loss.
    pub batch_pairs: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Update the sentence rows themselves (a lookup-table encoder).
    pub finetune_embeddings: bool,
    /// Let perceptual pairs join two captions of the same image.
    pub allow_same_image_pairs: bool,
    /// Store wall-clock seconds in the log (breaks bit-identical logs).
    pub record_wall_time: bool,
    /// Evaluate the structural measures every this many epochs (0 = never).
    pub snapshot_every: usize,
    pub metrics: MetricOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::CP,
            grounded_space: true,
            gamma: 0.5,
            gamma_prime: 0.5,
            alpha_c: 0.01,
            alpha_p: 0.01,
            lr: 8e-4,
            d_g: 512,
            d_h: 512,
            batch_triplets: 128,
            batch_pairs: 128,
            epochs: 10,
            seed: 0,
            finetune_embeddings: false,
            allow_same_image_pairs: false,
            record_wall_time: false,
            snapshot_every: 0,
            metrics: MetricOptions::default(),
        }
    }
}

impl TrainConfig {
    pub fn loss_weights(&self) -> LossWeights {
        let (alpha_c, alpha_p) = match self.scenario {
            Scenario::C => (self.alpha_c, 0.0),
            Scenario::P => (0.0, self.alpha_p),
            Scenario::CP => (self.alpha_c, self.alpha_p),
            Scenario::CM => (0.0, 0.0),
        };
        LossWeights {
            alpha_c,
            alpha_p,
            gamma: self.gamma,
            gamma_prime: self.gamma_prime,
        }
    }

    /// Output width of the projector for the given input dimensions.
    pub fn out_dim(&self, d_i: usize) -> usize {
        if self.scenario == Scenario::CM {
            d_i
        } else {
            self.d_g
        }
    }

    pub fn validate(&self, d_t: usize, d_i: usize) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        for (name, v) in [("gamma", self.gamma), ("gamma_prime", self.gamma_prime)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for (name, v) in [("alpha_c", self.alpha_c), ("alpha_p", self.alpha_p)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.batch_triplets == 0 || self.epochs == 0 {
            return bad("batch_triplets and epochs must be positive".into());
        }
        if self.scenario.uses_perceptual() && self.batch_pairs < 2 {
            return bad("the perceptual loss needs at least 2 pairs per batch".into());
        }
        if self.grounded_space && (self.d_h == 0 || (self.scenario != Scenario::CM && self.d_g == 0)) {
            return bad("d_g and d_h must be positive".into());
        }
        if self.scenario == Scenario::CM && !self.grounded_space && d_t != d_i {
            return bad(format!(
                "CM with g = id compares sentences to images directly, which needs d_t == d_i (got {d_t} and {d_i})"
            ));
        }
        if !self.grounded_space && !self.finetune_embeddings {
            return bad("g = id without fine-tuning the embeddings leaves nothing to train".into());
        }
        Ok(())
    }
}
