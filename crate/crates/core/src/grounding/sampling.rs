use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::GroundingError;
use crate::embedstore::CaptionCorpus;

/// `(s, s+, s-)`: the positive shares the anchor's image, the negative does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

impl Triplet {
    pub fn is_valid(&self, corpus: &CaptionCorpus) -> bool {
        let n = corpus.num_captions();
        self.anchor < n
            && self.positive < n
            && self.negative < n
            && self.anchor != self.positive
            && corpus.image_of(self.anchor) == corpus.image_of(self.positive)
            && corpus.image_of(self.anchor) != corpus.image_of(self.negative)
    }
}

/// Two captions and their images, for the perceptual objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimPair {
    pub k1: usize,
    pub k2: usize,
    pub image1: usize,
    pub image2: usize,
}

/// A sentence, its matching image and a non-matching image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CmItem {
    pub sentence: usize,
    pub image: usize,
    pub negative_image: usize,
}

/// Draws triplets: positive uniform over the anchor's cluster-mates,
/// negative uniform over captions of every other image.
#[derive(Debug, Clone)]
pub struct TripletSampler<'a> {
    corpus: &'a CaptionCorpus,
    eligible: Vec<usize>,
}

impl<'a> TripletSampler<'a> {
    pub fn new(corpus: &'a CaptionCorpus) -> Result<Self, GroundingError> {
        if corpus.num_images() < 2 {
            return Err(GroundingError::NoValidTriplet(
                "a negative needs at least two images".into(),
            ));
        }
        let eligible: Vec<usize> = (0..corpus.num_captions())
            .filter(|&c| corpus.captions_of(corpus.image_of(c)).len() >= 2)
            .collect();
        if eligible.is_empty() {
            return Err(GroundingError::NoValidTriplet(
                "every image owns a single caption".into(),
            ));
        }
        Ok(Self { corpus, eligible })
    }

    /// Whether `c` can anchor a triplet.
    pub fn can_anchor(&self, c: usize) -> bool {
        self.corpus.captions_of(self.corpus.image_of(c)).len() >= 2
    }

    pub fn triplet_for<R: Rng + ?Sized>(&self, anchor: usize, rng: &mut R) -> Option<Triplet> {
        let image = self.corpus.image_of(anchor);
        let cluster = self.corpus.captions_of(image);
        if cluster.len() < 2 {
            return None;
        }
        let own = cluster
            .iter()
            .position(|&c| c == anchor)
            .expect("anchor in own cluster");
        let mut j = rng.random_range(0..cluster.len() - 1);
        if j >= own {
            j += 1;
        }
        let n = self.corpus.num_captions();
        let negative = loop {
            let c = rng.random_range(0..n);
            if self.corpus.image_of(c) != image {
                break c;
            }
        };
        Some(Triplet {
            anchor,
            positive: cluster[j],
            negative,
        })
    }

    /// `count` triplets with anchors drawn uniformly among eligible captions.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Triplet> {
        (0..count)
            .map(|_| {
                let anchor = self.eligible[rng.random_range(0..self.eligible.len())];
                self.triplet_for(anchor, rng).expect("eligible anchor")
            })
            .collect()
    }

    /// One triplet per given anchor; anchors in single-caption clusters are skipped.
    pub fn for_anchors<R: Rng + ?Sized>(&self, anchors: &[usize], rng: &mut R) -> Vec<Triplet> {
        anchors.iter().filter_map(|&a| self.triplet_for(a, rng)).collect()
    }
}

pub fn sample_triplets<R: Rng + ?Sized>(
    corpus: &CaptionCorpus,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Triplet>, GroundingError> {
    Ok(TripletSampler::new(corpus)?.sample(count, rng))
}

/// Number of distinct unordered caption pairs available to [`sample_pairs`].
pub fn max_pairs(corpus: &CaptionCorpus, allow_same_image: bool) -> u64 {
    let n = corpus.num_captions() as u64;
    let all = n * n.saturating_sub(1) / 2;
    if allow_same_image {
        all
    } else {
        let same: u64 = corpus
            .clusters()
            .iter()
            .map(|c| {
                let s = c.len() as u64;
                s * (s - 1) / 2
            })
            .sum();
        all - same
    }
}

/// Draws `count` distinct unordered caption pairs. Unless `allow_same_image`
/// is set, both captions of a pair describe different images.
pub fn sample_pairs<R: Rng + ?Sized>(
    corpus: &CaptionCorpus,
    count: usize,
    allow_same_image: bool,
    rng: &mut R,
) -> Result<Vec<SimPair>, GroundingError> {
    let available = max_pairs(corpus, allow_same_image);
    if (count as u64) > available {
        return Err(GroundingError::InsufficientPairs(format!(
            "requested {count} distinct pairs but only {available} exist"
        )));
    }
    let accept = |a: usize, b: usize| a != b && (allow_same_image || corpus.image_of(a) != corpus.image_of(b));
    let make = |a: usize, b: usize| SimPair {
        k1: a,
        k2: b,
        image1: corpus.image_of(a),
        image2: corpus.image_of(b),
    };
    let n = corpus.num_captions();
    if 2 * count as u64 > available {
        // Dense request: enumerate and take a random prefix.
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| accept(a, b))
            .collect();
        let (chosen, _) = all.partial_shuffle(rng, count);
        return Ok(chosen.iter().map(|&(a, b)| make(a, b)).collect());
    }
    let mut seen = HashSet::with_capacity(count);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if !accept(a, b) || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        pairs.push(make(a, b));
    }
    Ok(pairs)
}

/// For each sentence, its image and a uniformly drawn non-matching image.
pub fn sample_cm_items<R: Rng + ?Sized>(
    corpus: &CaptionCorpus,
    sentences: &[usize],
    rng: &mut R,
) -> Result<Vec<CmItem>, GroundingError> {
    let m = corpus.num_images();
    if m < 2 {
        return Err(GroundingError::NoValidTriplet(
            "a non-matching image needs at least two images".into(),
        ));
    }
    Ok(sentences
        .iter()
        .map(|&s| {
            let image = corpus.image_of(s);
            let mut neg = rng.random_range(0..m - 1);
            if neg >= image {
                neg += 1;
            }
            CmItem {
                sentence: s,
                image,
                negative_image: neg,
            }
        })
        .collect())
}
