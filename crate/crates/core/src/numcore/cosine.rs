use super::NumError;

/// Norms below this are treated as degenerate.
pub const COSINE_EPS: f64 = 1e-12;

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn check(x: &[f64], y: &[f64]) -> Result<(f64, f64), NumError> {
    if x.len() != y.len() {
        return Err(NumError::ShapeMismatch(format!(
            "cosine of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (nx, ny) = (norm(x), norm(y));
    if nx < COSINE_EPS || ny < COSINE_EPS {
        return Err(NumError::ZeroNorm);
    }
    Ok((nx, ny))
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64, NumError> {
    let (nx, ny) = check(x, y)?;
    Ok((dot(x, y) / (nx * ny)).clamp(-1.0, 1.0))
}

/// Gradient of `upstream * cos(x, y)` with respect to `x` and `y`.
///
/// `d cos / dx = y / (|x||y|) - cos * x / |x|^2`.
pub fn cosine_backward(x: &[f64], y: &[f64], upstream: f64) -> Result<(Vec<f64>, Vec<f64>), NumError> {
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; y.len()];
    cosine_with_grad(x, y, upstream, &mut gx, &mut gy)?;
    Ok((gx, gy))
}

/// Computes `cos(x, y)` and accumulates `upstream * d cos` into `gx`, `gy`.
///
/// The returned value is clamped; the accumulated gradient is that of the
/// unclamped quotient.
pub fn cosine_with_grad(x: &[f64], y: &[f64], upstream: f64, gx: &mut [f64], gy: &mut [f64]) -> Result<f64, NumError> {
    let (nx, ny) = check(x, y)?;
    let inv = 1.0 / (nx * ny);
    let c = dot(x, y) * inv;
    if upstream != 0.0 {
        let sx = c / (nx * nx);
        let sy = c / (ny * ny);
        for i in 0..x.len() {
            gx[i] += upstream * (y[i] * inv - sx * x[i]);
            gy[i] += upstream * (x[i] * inv - sy * y[i]);
        }
    }
    Ok(c.clamp(-1.0, 1.0))
}
