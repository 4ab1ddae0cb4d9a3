use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::BaselineError;

/// Principal components of a centered data matrix.
///
/// `components` holds one unit row per component, in descending order of
/// explained variance. Each component's largest-magnitude coordinate is made
/// positive so the basis is reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn num_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, BaselineError> {
        if x.ncols() != self.dim() {
            return Err(BaselineError::ShapeMismatch(format!(
                "data has {} columns, PCA expects {}",
                x.ncols(),
                self.dim()
            )));
        }
        Ok((&x - &self.mean).dot(&self.components.t()))
    }

    pub fn transform_one(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>, BaselineError> {
        let row = x.insert_axis(Axis(0));
        Ok(self.transform(row)?.row(0).to_owned())
    }

    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>, BaselineError> {
        if z.ncols() != self.num_components() {
            return Err(BaselineError::ShapeMismatch(format!(
                "codes have {} columns, PCA has {} components",
                z.ncols(),
                self.num_components()
            )));
        }
        Ok(z.dot(&self.components) + &self.mean)
    }
}

/// Fits `m` components with an exact symmetric eigendecomposition of the
/// sample covariance (divisor `n - 1`).
pub fn fit_pca(data: ArrayView2<'_, f64>, m: usize) -> Result<PcaModel, BaselineError> {
    let (n, d) = data.dim();
    let max = n.saturating_sub(1).min(d);
    if m == 0 || m > max {
        return Err(BaselineError::InvalidM { m, max });
    }
    let mean = data.mean_axis(Axis(0)).expect("n > 1");
    let centered = &data - &mean;
    let cov = centered.t().dot(&centered) / (n - 1) as f64;
    let cov_na = DMatrix::from_fn(d, d, |i, j| 0.5 * (cov[[i, j]] + cov[[j, i]]));
    let eig = SymmetricEigen::new(cov_na);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut components = Array2::zeros((m, d));
    let mut explained_variance = Vec::with_capacity(m);
    for (r, &col) in order.iter().take(m).enumerate() {
        let v = eig.eigenvectors.column(col);
        let pivot = (0..d)
            .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap().then(b.cmp(&a)))
            .unwrap();
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[[r, j]] = sign * v[j];
        }
        explained_variance.push(eig.eigenvalues[col].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}
