use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::BaselineError;
use crate::embedstore::CaptionCorpus;

/// Affine map `s -> s W + b` from sentence space (`d_t`) to image space (`d_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl LinearMap {
    pub fn d_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.w.ncols()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        x.dot(&self.w) + &self.b
    }
}

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Caption rows paired with the rows of their images.
pub(crate) fn regression_targets(images: ArrayView2<'_, f64>, corpus: &CaptionCorpus) -> Array2<f64> {
    images.select(Axis(0), corpus.caption_to_image())
}

/// `sum ||s W + b - y||^2 + lambda ||W||_F^2`
pub fn objective(map: &LinearMap, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, lambda: f64) -> f64 {
    let resid = map.predict(x) - y;
    resid.iter().map(|r| r * r).sum::<f64>() + lambda * map.w.iter().map(|w| w * w).sum::<f64>()
}

/// Ridge regression from each caption's sentence vector to its image vector.
///
/// The bias is not penalized. Solved through the normal equations of the
/// centered problem, `(Xc^T Xc + lambda I) W = Xc^T Yc`, `b = y_mean - x_mean W`.
pub fn fit_linear(
    sentences: ArrayView2<'_, f64>,
    images: ArrayView2<'_, f64>,
    corpus: &CaptionCorpus,
    ridge_lambda: f64,
) -> Result<LinearMap, BaselineError> {
    if sentences.nrows() != corpus.num_captions() || images.nrows() != corpus.num_images() {
        return Err(BaselineError::ShapeMismatch(format!(
            "{} sentence rows / {} image rows for a corpus of {} captions and {} images",
            sentences.nrows(),
            images.nrows(),
            corpus.num_captions(),
            corpus.num_images()
        )));
    }
    let targets = regression_targets(images, corpus);
    fit_linear_xy(sentences, targets.view(), ridge_lambda)
}

pub(crate) fn fit_linear_xy(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    ridge_lambda: f64,
) -> Result<LinearMap, BaselineError> {
    if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
        return Err(BaselineError::InvalidParam(format!("ridge_lambda = {ridge_lambda}")));
    }
    let (n, d_t) = x.dim();
    if n == 0 {
        return Err(BaselineError::SingularSystem("no training pairs".into()));
    }
    if ridge_lambda == 0.0 && n < d_t + 1 {
        return Err(BaselineError::SingularSystem(format!(
            "{n} pairs cannot determine a {d_t}-dimensional affine map without regularization"
        )));
    }
    let x_mean = x.mean_axis(Axis(0)).expect("n > 0");
    let y_mean = y.mean_axis(Axis(0)).expect("n > 0");
    let xc = &x - &x_mean;
    let yc = &y - &y_mean;
    let mut gram = xc.t().dot(&xc);
    for i in 0..d_t {
        gram[[i, i]] += ridge_lambda;
    }
    let rhs = xc.t().dot(&yc);
    let gram_na = to_na(&gram);
    let chol = gram_na
        .clone()
        .cholesky()
        .ok_or_else(|| BaselineError::SingularSystem("normal matrix is not positive definite".into()))?;
    if ridge_lambda == 0.0 {
        let max_diag = (0..d_t).map(|i| gram[[i, i]]).fold(0.0f64, f64::max);
        let l = chol.l_dirty();
        let min_pivot = (0..d_t).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if min_pivot <= 1e-12 * max_diag.max(f64::MIN_POSITIVE) {
            return Err(BaselineError::SingularSystem(format!(
                "normal matrix is rank deficient (pivot {min_pivot:e})"
            )));
        }
    }
    let sol = chol.solve(&to_na(&rhs));
    let w = Array2::from_shape_fn((d_t, y.ncols()), |(i, j)| sol[(i, j)]);
    let b = &y_mean - &x_mean.dot(&w);
    Ok(LinearMap { w, b })
}
