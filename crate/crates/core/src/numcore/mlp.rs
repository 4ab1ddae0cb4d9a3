use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::NumError;

/// Two-layer perceptron `out = W2^T tanh(W1^T x + b1) + b2`.
///
/// `w1` is `d_in x d_h` and `w2` is `d_h x d_out`, so a batch of row vectors
/// `X` maps to `tanh(X W1 + b1) W2 + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedProjector {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Activations kept from a single-vector forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    input: Array1<f64>,
    hidden: Array1<f64>,
}

/// Activations kept from a batched forward pass.
#[derive(Debug, Clone)]
pub struct BatchCache {
    input: Array2<f64>,
    hidden: Array2<f64>,
}

/// Parameter gradients, shaped like [`GroundedProjector`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorGrads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl ProjectorGrads {
    pub fn zeros_like(p: &GroundedProjector) -> Self {
        Self {
            w1: Array2::zeros(p.w1.raw_dim()),
            b1: Array1::zeros(p.b1.raw_dim()),
            w2: Array2::zeros(p.w2.raw_dim()),
            b2: Array1::zeros(p.b2.raw_dim()),
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.w1 *= a;
        self.b1 *= a;
        self.w2 *= a;
        self.b2 *= a;
    }

    /// `self += a * other`
    pub fn add_scaled(&mut self, a: f64, other: &ProjectorGrads) {
        self.w1.scaled_add(a, &other.w1);
        self.b1.scaled_add(a, &other.b1);
        self.w2.scaled_add(a, &other.w2);
        self.b2.scaled_add(a, &other.b2);
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl GroundedProjector {
    pub fn zeros(d_in: usize, d_h: usize, d_out: usize) -> Self {
        Self {
            w1: Array2::zeros((d_in, d_h)),
            b1: Array1::zeros(d_h),
            w2: Array2::zeros((d_h, d_out)),
            b2: Array1::zeros(d_out),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(d_in: usize, d_h: usize, d_out: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(d_in, d_h, d_out);
        let a1 = (6.0 / (d_in + d_h) as f64).sqrt();
        p.w1.mapv_inplace(|_| rng.random_range(-a1..a1));
        let a2 = (6.0 / (d_h + d_out) as f64).sqrt();
        p.w2.mapv_inplace(|_| rng.random_range(-a2..a2));
        p
    }

    pub fn from_parts(w1: Array2<f64>, b1: Array1<f64>, w2: Array2<f64>, b2: Array1<f64>) -> Result<Self, NumError> {
        if w1.ncols() != b1.len() || w2.nrows() != b1.len() || w2.ncols() != b2.len() {
            return Err(NumError::ShapeMismatch(format!(
                "w1 {:?}, b1 {}, w2 {:?}, b2 {}",
                w1.dim(),
                b1.len(),
                w2.dim(),
                b2.len()
            )));
        }
        Ok(Self {
            w1: w1.as_standard_layout().into_owned(),
            b1,
            w2: w2.as_standard_layout().into_owned(),
            b2,
        })
    }

    pub fn d_in(&self) -> usize {
        self.w1.nrows()
    }

    pub fn d_hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.w2.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn forward(&self, x: ArrayView1<'_, f64>) -> Result<(Array1<f64>, MlpCache), NumError> {
        if x.len() != self.d_in() {
            return Err(NumError::ShapeMismatch(format!(
                "input of length {} for projector with d_in {}",
                x.len(),
                self.d_in()
            )));
        }
        let hidden = (x.dot(&self.w1) + &self.b1).mapv(f64::tanh);
        let out = hidden.dot(&self.w2) + &self.b2;
        Ok((
            out,
            MlpCache {
                input: x.to_owned(),
                hidden,
            },
        ))
    }

    /// Returns parameter gradients and the gradient with respect to the input.
    pub fn backward(
        &self,
        cache: &MlpCache,
        upstream: ArrayView1<'_, f64>,
    ) -> Result<(ProjectorGrads, Array1<f64>), NumError> {
        if upstream.len() != self.d_out() {
            return Err(NumError::ShapeMismatch(format!(
                "upstream of length {} for d_out {}",
                upstream.len(),
                self.d_out()
            )));
        }
        let w2 = outer(cache.hidden.view(), upstream);
        let pre = self.w2.dot(&upstream) * cache.hidden.mapv(|h| 1.0 - h * h);
        let w1 = outer(cache.input.view(), pre.view());
        let grad_input = self.w1.dot(&pre);
        Ok((
            ProjectorGrads {
                w1,
                b1: pre,
                w2,
                b2: upstream.to_owned(),
            },
            grad_input,
        ))
    }

    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, BatchCache), NumError> {
        if x.ncols() != self.d_in() {
            return Err(NumError::ShapeMismatch(format!(
                "input width {} for projector with d_in {}",
                x.ncols(),
                self.d_in()
            )));
        }
        let mut hidden = x.dot(&self.w1);
        hidden += &self.b1;
        hidden.mapv_inplace(f64::tanh);
        let mut out = hidden.dot(&self.w2);
        out += &self.b2;
        Ok((
            out,
            BatchCache {
                input: x.to_owned(),
                hidden,
            },
        ))
    }

    /// Batched backward pass. Parameter gradients are summed over rows; the
    /// input gradient is only formed when `want_input` is set.
    pub fn backward_batch(
        &self,
        cache: &BatchCache,
        upstream: ArrayView2<'_, f64>,
        want_input: bool,
    ) -> Result<(ProjectorGrads, Option<Array2<f64>>), NumError> {
        if upstream.dim() != (cache.hidden.nrows(), self.d_out()) {
            return Err(NumError::ShapeMismatch(format!(
                "upstream {:?} for batch of {} rows and d_out {}",
                upstream.dim(),
                cache.hidden.nrows(),
                self.d_out()
            )));
        }
        let w2 = cache.hidden.t().dot(&upstream);
        let b2 = upstream.sum_axis(Axis(0));
        let mut pre = upstream.dot(&self.w2.t());
        ndarray::Zip::from(&mut pre)
            .and(&cache.hidden)
            .for_each(|g, &h| *g *= 1.0 - h * h);
        let w1 = cache.input.t().dot(&pre);
        let b1 = pre.sum_axis(Axis(0));
        let grad_input = want_input.then(|| pre.dot(&self.w1.t()));
        Ok((ProjectorGrads { w1, b1, w2, b2 }, grad_input))
    }
}

fn outer(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.len(), b.len()));
    for (i, &ai) in a.iter().enumerate() {
        out.row_mut(i).scaled_add(ai, &b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use ndarray::array;

    fn random_projector(seed: u64, d_in: usize, d_h: usize, d_out: usize) -> GroundedProjector {
        let mut rng = seeded_rng(seed);
        let mut p = GroundedProjector::init(d_in, d_h, d_out, &mut rng);
        p.b1.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        p.b2.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        p
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let p = GroundedProjector::zeros(3, 4, 2);
        let (out, _) = p.forward(array![1.0, -2.0, 0.5].view()).unwrap();
        assert_eq!(out, array![0.0, 0.0]);
    }

    #[test]
    fn identity_weights_give_tanh() {
        let eye = Array2::eye(3);
        let p = GroundedProjector::from_parts(eye.clone(), Array1::zeros(3), eye, Array1::zeros(3)).unwrap();
        let x = array![0.01, -0.02, 0.03];
        let (out, _) = p.forward(x.view()).unwrap();
        for (o, xi) in out.iter().zip(x.iter()) {
            assert!((o - xi.tanh()).abs() < 1e-15);
            assert!((o - xi).abs() < 1e-5);
        }
    }

    #[test]
    fn wrong_input_length() {
        let p = GroundedProjector::zeros(3, 4, 2);
        assert!(matches!(p.forward(array![1.0].view()), Err(NumError::ShapeMismatch(_))));
    }

    #[test]
    fn batch_matches_single_vector_path() {
        let p = random_projector(8, 5, 7, 3);
        let mut rng = seeded_rng(9);
        let x = Array2::from_shape_fn((4, 5), |_| rng.random_range(-1.0..1.0));
        let up = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
        let (out, cache) = p.forward_batch(x.view()).unwrap();
        let (grads, gin) = p.backward_batch(&cache, up.view(), true).unwrap();
        let gin = gin.unwrap();
        let mut acc = ProjectorGrads::zeros_like(&p);
        for r in 0..4 {
            let (o, c) = p.forward(x.row(r)).unwrap();
            for (a, b) in o.iter().zip(out.row(r).iter()) {
                assert!((a - b).abs() < 1e-12);
            }
            let (g, gi) = p.backward(&c, up.row(r)).unwrap();
            acc.add_scaled(1.0, &g);
            for (a, b) in gi.iter().zip(gin.row(r).iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        for (a, b) in acc.tensors().iter().zip(grads.tensors().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
