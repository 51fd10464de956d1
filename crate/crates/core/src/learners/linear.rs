//! Multinomial logistic regression trained by per-instance SGD with L2
//! regularization. The analytic batch gradient is exposed separately so it
//! can be checked against finite differences.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-12;

/// Weights are stored row-major as `n_classes x (dim + 1)`; the last column
/// is the bias (excluded from regularization). Steps decay as 1/sqrt(t) and
/// the deployed weights are the tail average of the final epoch's iterates,
/// which stabilizes the final model considerably on noisy data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticSgd {
    pub n_classes: usize,
    pub dim: usize,
    pub step: f64,
    pub reg: f64,
    pub epochs: usize,
    weights: Vec<f64>,
    /// Global step counter; persists across incremental updates so the
    /// decay schedule continues rather than restarting.
    t: u64,
}

fn softmax(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

impl LogisticSgd {
    /// Zero-initialized model that learns only through `continue_fit`.
    pub fn new_zeroed(n_classes: usize, dim: usize, step: f64, reg: f64, epochs: usize) -> Self {
        LogisticSgd {
            n_classes,
            dim,
            step,
            reg,
            epochs,
            weights: vec![0.0; n_classes * (dim + 1)],
            t: 0,
        }
    }

    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        step: f64,
        reg: f64,
        epochs: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let dim = x[0].len();
        let mut model = LogisticSgd {
            n_classes,
            dim,
            step,
            reg,
            epochs,
            weights: vec![0.0; n_classes * (dim + 1)],
            t: 0,
        };
        model.run_epochs(x, y, rng);
        model
    }

    /// Continue gradient steps from the current weights on new data.
    pub fn continue_fit(&mut self, x: &[Vec<f64>], y: &[usize], rng: &mut ChaCha8Rng) {
        self.run_epochs(x, y, rng);
    }

    fn run_epochs(&mut self, x: &[Vec<f64>], y: &[usize], rng: &mut ChaCha8Rng) {
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut scores = vec![0.0; self.n_classes];
        // iterates of the final epoch are averaged into the deployed weights
        let tail_epoch = self.epochs.saturating_sub(1);
        let mut tail_sum = vec![0.0; self.weights.len()];
        let mut tail_n = 0u64;
        for epoch in 0..self.epochs {
            order.shuffle(rng);
            for &i in &order {
                self.t += 1;
                let step = self.step / (1.0 + (self.t as f64).sqrt() * self.step * 0.1);
                self.raw_scores(&x[i], &mut scores);
                softmax(&mut scores);
                for (k, &score) in scores.iter().enumerate() {
                    let g = score - f64::from(u8::from(y[i] == k));
                    let row = k * (self.dim + 1);
                    for (j, &xj) in x[i].iter().enumerate() {
                        let w = &mut self.weights[row + j];
                        *w -= step * (g * xj + self.reg * *w);
                    }
                    self.weights[row + self.dim] -= step * g;
                }
                if epoch == tail_epoch {
                    for (s, w) in tail_sum.iter_mut().zip(&self.weights) {
                        *s += *w;
                    }
                    tail_n += 1;
                }
            }
        }
        if tail_n > 0 {
            for (w, s) in self.weights.iter_mut().zip(&tail_sum) {
                *w = *s / tail_n as f64;
            }
        }
    }

    fn raw_scores(&self, x: &[f64], out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate().take(self.n_classes) {
            let row = k * (self.dim + 1);
            let mut s = self.weights[row + self.dim];
            for (j, &xj) in x.iter().enumerate() {
                s += self.weights[row + j] * xj;
            }
            *slot = s;
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_classes];
        self.raw_scores(x, &mut scores);
        softmax(&mut scores);
        scores
    }
}

/// Mean cross-entropy loss with L2 penalty (biases unpenalized) for a flat
/// `n_classes x (dim + 1)` weight vector.
pub fn log_loss(weights: &[f64], x: &[Vec<f64>], y: &[usize], n_classes: usize, reg: f64) -> f64 {
    let dim = x[0].len();
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut scores = vec![0.0; n_classes];
    for (xi, &yi) in x.iter().zip(y) {
        for (k, s) in scores.iter_mut().enumerate() {
            let row = k * (dim + 1);
            *s = weights[row + dim]
                + xi.iter()
                    .enumerate()
                    .map(|(j, &v)| weights[row + j] * v)
                    .sum::<f64>();
        }
        softmax(&mut scores);
        loss -= scores[yi].max(EPS).ln();
    }
    let mut penalty = 0.0;
    for k in 0..n_classes {
        let row = k * (dim + 1);
        for j in 0..dim {
            penalty += weights[row + j] * weights[row + j];
        }
    }
    loss / n + 0.5 * reg * penalty
}

/// Analytic gradient of [`log_loss`] with respect to the weights.
pub fn log_loss_grad(
    weights: &[f64],
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    reg: f64,
) -> Vec<f64> {
    let dim = x[0].len();
    let n = x.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut scores = vec![0.0; n_classes];
    for (xi, &yi) in x.iter().zip(y) {
        for (k, s) in scores.iter_mut().enumerate() {
            let row = k * (dim + 1);
            *s = weights[row + dim]
                + xi.iter()
                    .enumerate()
                    .map(|(j, &v)| weights[row + j] * v)
                    .sum::<f64>();
        }
        softmax(&mut scores);
        for (k, &score) in scores.iter().enumerate() {
            let g = (score - f64::from(u8::from(yi == k))) / n;
            let row = k * (dim + 1);
            for (j, &v) in xi.iter().enumerate() {
                grad[row + j] += g * v;
            }
            grad[row + dim] += g;
        }
    }
    for k in 0..n_classes {
        let row = k * (dim + 1);
        for j in 0..dim {
            grad[row + j] += reg * weights[row + j];
        }
    }
    grad
}
