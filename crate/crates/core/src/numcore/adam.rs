use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 8e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected ADAM over an ordered list of parameter tensors.
///
/// Moment buffers are allocated on the first step from the tensor lengths;
/// every later step must pass tensors of the same lengths in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update to every `(params, grads)` slot.
    pub fn step(&mut self, slots: &mut [(&mut [f64], &[f64])]) {
        if self.m.is_empty() {
            self.m = slots.iter().map(|(p, _)| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        assert_eq!(self.m.len(), slots.len(), "ADAM slot count changed between steps");
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for ((params, grads), (m, v)) in slots.iter_mut().zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            assert_eq!(params.len(), grads.len(), "parameter/gradient length mismatch");
            assert_eq!(params.len(), m.len(), "parameter length changed between steps");
            for i in 0..params.len() {
                let g = grads[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut adam = AdamState::new(AdamConfig::default());
        let mut p = vec![1.0, -2.0, 3.0];
        adam.step(&mut [(&mut p, &[0.0, 0.0, 0.0])]);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let cfg = AdamConfig {
            lr: 0.01,
            eps: 1e-16,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(cfg);
        let mut p = vec![0.0, 0.0, 0.0];
        adam.step(&mut [(&mut p, &[3.0, -0.001, 250.0])]);
        for (pi, s) in p.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((pi - s * 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_norm_decreases_over_run() {
        // f(p) = ||p||^2 / 2 from p = [1, 1] with lr = 0.1. Both coordinates
        // follow the same scalar recursion, simulated here independently.
        let mut adam = AdamState::new(AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        });
        let mut p = vec![1.0, 1.0];
        let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        let mut norms = vec![2f64.sqrt()];
        for t in 1..=100 {
            let g = p.clone();
            adam.step(&mut [(&mut p, &g)]);
            m = 0.9 * m + 0.1 * x;
            v = 0.999 * v + 0.001 * x * x;
            let m_hat = m / (1.0 - 0.9f64.powi(t));
            let v_hat = v / (1.0 - 0.999f64.powi(t));
            x -= 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
            assert!((p[0] - x).abs() < 1e-12 && (p[1] - x).abs() < 1e-12);
            norms.push((p[0] * p[0] + p[1] * p[1]).sqrt());
        }
        // Monotone approach until the first overshoot past the minimum.
        for w in norms[..12].windows(2) {
            assert!(w[1] < w[0]);
        }
        // After that the iterate oscillates around 0 with shrinking swings:
        // every local peak is strictly below the previous one.
        let peaks: Vec<f64> = norms
            .windows(3)
            .filter(|w| w[1] > w[0] && w[1] >= w[2])
            .map(|w| w[1])
            .collect();
        assert!(peaks.len() >= 3);
        for w in peaks.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(norms[100] < 0.01 * norms[0]);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut adam = AdamState::new(AdamConfig::default());
            let mut p = vec![0.3, 0.7];
            for k in 0..5 {
                let g = [k as f64 * 0.1, -0.2];
                adam.step(&mut [(&mut p, &g)]);
            }
            (p, adam)
        };
        let (p1, a1) = run();
        let (p2, a2) = run();
        assert_eq!(p1, p2);
        assert_eq!(a1, a2);
    }
}
