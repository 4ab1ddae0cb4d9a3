use super::MetricError;
use crate::grounding::MIN_VARIANCE;

fn check_lengths(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::ShapeMismatch(format!(
            "sequences of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(MetricError::DegenerateVariance(format!(
            "a correlation needs at least 2 points, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Two-pass Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_lengths(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxx += da * da;
        syy += db * db;
        sxy += da * db;
    }
    if sxx / n <= MIN_VARIANCE || syy / n <= MIN_VARIANCE {
        return Err(MetricError::DegenerateVariance(format!(
            "variances {:e} and {:e}",
            sxx / n,
            syy / n
        )));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation: Pearson of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_lengths(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}
