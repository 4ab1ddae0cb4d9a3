use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2};

use super::GroundingError;
use crate::numcore::{BatchCache, GroundedProjector, ProjectorGrads};

/// How sentence rows reach the space the losses operate in.
#[derive(Debug, Clone, Copy)]
pub enum Projection<'a> {
    /// `g = id`: losses act on the sentence rows themselves, and gradients
    /// flow into those rows.
    Identity,
    /// `g` is a 2-layer MLP. With `input_grads` set, gradients with respect
    /// to the touched sentence rows are returned too.
    Mlp {
        projector: &'a GroundedProjector,
        input_grads: bool,
    },
}

impl<'a> Projection<'a> {
    pub fn mlp(projector: &'a GroundedProjector) -> Self {
        Projection::Mlp {
            projector,
            input_grads: false,
        }
    }

    pub fn projector(&self) -> Option<&'a GroundedProjector> {
        match self {
            Projection::Identity => None,
            Projection::Mlp { projector, .. } => Some(projector),
        }
    }
}

/// Gradients of a loss. `rows` holds one entry per touched sentence row;
/// untouched rows have no entry (zero gradient).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub projector: Option<ProjectorGrads>,
    pub rows: BTreeMap<usize, Array1<f64>>,
}

impl Gradients {
    pub fn scale(&mut self, a: f64) {
        if let Some(p) = &mut self.projector {
            p.scale(a);
        }
        for g in self.rows.values_mut() {
            *g *= a;
        }
    }

    /// `self += a * other`
    pub fn add_scaled(&mut self, a: f64, other: &Gradients) {
        match (&mut self.projector, &other.projector) {
            (Some(mine), Some(theirs)) => mine.add_scaled(a, theirs),
            (None, Some(theirs)) => {
                let mut g = theirs.clone();
                g.scale(a);
                self.projector = Some(g);
            }
            _ => {}
        }
        for (&r, g) in &other.rows {
            match self.rows.get_mut(&r) {
                Some(mine) => mine.scaled_add(a, g),
                None => {
                    self.rows.insert(r, g * a);
                }
            }
        }
    }

    /// Scatters row gradients into a dense `n x d` matrix.
    pub fn dense_rows(&self, n: usize, d: usize) -> Array2<f64> {
        let mut out = Array2::zeros((n, d));
        for (&r, g) in &self.rows {
            out.row_mut(r).assign(g);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.projector.as_ref().is_none_or(ProjectorGrads::is_finite)
            && self.rows.values().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

/// Projected rows of every caption touched by a batch, plus the upstream
/// gradient accumulated against them.
pub(crate) struct ProjectedBatch<'a> {
    projection: Projection<'a>,
    captions: Vec<usize>,
    local: BTreeMap<usize, usize>,
    out: Array2<f64>,
    cache: Option<BatchCache>,
    upstream: Array2<f64>,
}

impl<'a> ProjectedBatch<'a> {
    pub fn new(
        sentences: ArrayView2<'_, f64>,
        projection: Projection<'a>,
        touched: impl IntoIterator<Item = usize>,
    ) -> Result<Self, GroundingError> {
        let n = sentences.nrows();
        let mut local = BTreeMap::new();
        for c in touched {
            if c >= n {
                return Err(GroundingError::IndexOutOfRange { index: c, len: n });
            }
            local.insert(c, 0);
        }
        let captions: Vec<usize> = local.keys().copied().collect();
        for (i, c) in captions.iter().enumerate() {
            local.insert(*c, i);
        }
        let input = sentences.select(ndarray::Axis(0), &captions);
        let (out, cache) = match projection {
            Projection::Identity => (input, None),
            Projection::Mlp { projector, .. } => {
                let (out, cache) = projector.forward_batch(input.view())?;
                (out, Some(cache))
            }
        };
        let upstream = Array2::zeros(out.raw_dim());
        Ok(Self {
            projection,
            captions,
            local,
            out,
            cache,
            upstream,
        })
    }

    pub fn dim(&self) -> usize {
        self.out.ncols()
    }

    pub fn slot(&self, c: usize) -> usize {
        self.local[&c]
    }

    pub fn row(&self, slot: usize) -> &[f64] {
        let d = self.out.ncols();
        &self.out.as_slice().expect("standard layout")[slot * d..(slot + 1) * d]
    }

    pub fn grad_row_mut(&mut self, slot: usize) -> &mut [f64] {
        let d = self.upstream.ncols();
        &mut self.upstream.as_slice_mut().expect("standard layout")[slot * d..(slot + 1) * d]
    }

    /// Accumulates `g` into the upstream gradient of `slot`.
    pub fn push_grad(&mut self, slot: usize, g: &[f64]) {
        for (dst, v) in self.grad_row_mut(slot).iter_mut().zip(g) {
            *dst += v;
        }
    }

    pub fn into_gradients(self) -> Result<Gradients, GroundingError> {
        let mut grads = Gradients::default();
        let row_grads = match self.projection {
            Projection::Identity => Some(self.upstream),
            Projection::Mlp { projector, input_grads } => {
                let cache = self.cache.as_ref().expect("mlp forward keeps a cache");
                let (pg, gin) = projector.backward_batch(cache, self.upstream.view(), input_grads)?;
                grads.projector = Some(pg);
                gin
            }
        };
        if let Some(rows) = row_grads {
            for (slot, &c) in self.captions.iter().enumerate() {
                grads.rows.insert(c, rows.row(slot).to_owned());
            }
        }
        Ok(grads)
    }
}
