//! Gradient boosted trees with logistic loss (binary) and softmax loss
//! (multiclass). Each stage fits regression trees to the probability
//! residuals with Newton leaf values; incremental updates append stages
//! boosted from the current model's scores on the new data.

use serde::{Deserialize, Serialize};

use super::tree::RegTree;

const EPS: f64 = 1e-12;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softmax_into(scores: &[f64], out: &mut Vec<f64>) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(scores.iter().map(|s| (s - max).exp()));
    let sum: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= sum;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gbm {
    pub n_classes: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Initial scores: one log-odds value for binary, log-priors otherwise.
    base: Vec<f64>,
    /// One tree per stage for binary, `n_classes` trees per stage otherwise.
    stages: Vec<Vec<RegTree>>,
}

impl Gbm {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        n_stages: usize,
        learning_rate: f64,
        max_depth: usize,
    ) -> Self {
        let n = y.len();
        let mut counts = vec![0usize; n_classes];
        for &yi in y {
            counts[yi] += 1;
        }
        let base = if n_classes == 2 {
            let p1 = (counts[1] as f64 / n as f64).clamp(EPS, 1.0 - EPS);
            vec![(p1 / (1.0 - p1)).ln()]
        } else {
            counts
                .iter()
                .map(|&c| ((c as f64 / n as f64).max(EPS)).ln())
                .collect()
        };
        let mut model = Gbm {
            n_classes,
            learning_rate,
            max_depth,
            base,
            stages: Vec::with_capacity(n_stages),
        };
        let mut scores = model.initial_scores(n);
        model.boost(x, y, n_stages, &mut scores);
        model
    }

    fn initial_scores(&self, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.base.clone()).collect()
    }

    /// Current raw scores for each row of `x`.
    fn scores_for(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|xi| {
                let mut s = self.base.clone();
                for stage in &self.stages {
                    for (k, tree) in stage.iter().enumerate() {
                        s[k] += self.learning_rate * tree.predict(xi);
                    }
                }
                s
            })
            .collect()
    }

    /// Append `n_stages` stages fitted on `x`/`y`, starting from `scores`
    /// (updated in place).
    fn boost(&mut self, x: &[Vec<f64>], y: &[usize], n_stages: usize, scores: &mut [Vec<f64>]) {
        let n = x.len();
        let idx: Vec<usize> = (0..n).collect();
        let k_eff = self.base.len();
        let mut residual = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut probs = Vec::with_capacity(self.n_classes);
        for _ in 0..n_stages {
            let mut stage = Vec::with_capacity(k_eff);
            for k in 0..k_eff {
                if self.n_classes == 2 {
                    for i in 0..n {
                        let p = sigmoid(scores[i][0]);
                        residual[i] = y[i] as f64 - p;
                        hess[i] = (p * (1.0 - p)).max(EPS);
                    }
                } else {
                    let scale = (self.n_classes as f64 - 1.0) / self.n_classes as f64;
                    for i in 0..n {
                        softmax_into(&scores[i], &mut probs);
                        let p = probs[k];
                        residual[i] = scale * (usize::from(y[i] == k) as f64 - p);
                        hess[i] = scale * (p * (1.0 - p)).max(EPS);
                    }
                }
                let tree = RegTree::fit(x, &residual, Some(&hess), self.max_depth, None, None, &idx);
                for i in 0..n {
                    scores[i][k] += self.learning_rate * tree.predict(&x[i]);
                }
                stage.push(tree);
            }
            self.stages.push(stage);
        }
    }

    /// Continue boosting on new data; existing stages are untouched.
    pub fn continue_fit(&mut self, x: &[Vec<f64>], y: &[usize], n_stages: usize) {
        let mut scores = self.scores_for(x);
        self.boost(x, y, n_stages, &mut scores);
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, i: usize) -> &[RegTree] {
        &self.stages[i]
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.predict_proba_with_stages(x, self.stages.len())
    }

    /// Prediction truncated to the first `upto` stages.
    pub fn predict_proba_with_stages(&self, x: &[f64], upto: usize) -> Vec<f64> {
        let mut s = self.base.clone();
        for stage in self.stages.iter().take(upto) {
            for (k, tree) in stage.iter().enumerate() {
                s[k] += self.learning_rate * tree.predict(x);
            }
        }
        if self.n_classes == 2 {
            let p1 = sigmoid(s[0]);
            vec![1.0 - p1, p1]
        } else {
            let mut out = Vec::with_capacity(self.n_classes);
            softmax_into(&s, &mut out);
            out
        }
    }

    /// Mean training log-loss when predicting with the first `upto` stages.
    pub fn train_log_loss(&self, x: &[Vec<f64>], y: &[usize], upto: usize) -> f64 {
        let mut loss = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            let p = self.predict_proba_with_stages(xi, upto);
            loss -= p[yi].max(EPS).ln();
        }
        loss / x.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn noisy_threshold_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut r = rng::derive(seed, "gbm-test", 0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = r.gen_range(0.0..10.0);
            let b: f64 = r.gen_range(0.0..10.0);
            let label = usize::from(a + b <= 8.0);
            let label = if r.gen::<f64>() < 0.1 { 1 - label } else { label };
            x.push(vec![a, b]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn training_log_loss_is_non_increasing() {
        let (x, y) = noisy_threshold_data(400, 2);
        let model = Gbm::fit(&x, &y, 2, 40, 0.2, 3);
        let mut prev = f64::INFINITY;
        for stage in 0..=model.n_stages() {
            let loss = model.train_log_loss(&x, &y, stage);
            assert!(
                loss <= prev + 1e-9,
                "loss rose at stage {stage}: {prev} -> {loss}"
            );
            prev = loss;
        }
    }

    #[test]
    fn continue_fit_appends_and_preserves_stages() {
        let (x, y) = noisy_threshold_data(300, 3);
        let mut model = Gbm::fit(&x, &y, 2, 50, 0.1, 3);
        let frozen = serde_json::to_string(model.stage(49)).unwrap();
        let (x2, y2) = noisy_threshold_data(300, 4);
        model.continue_fit(&x2, &y2, 10);
        assert_eq!(model.n_stages(), 60);
        assert_eq!(serde_json::to_string(model.stage(49)).unwrap(), frozen);
    }

    #[test]
    fn multiclass_probabilities_sum_to_one() {
        let mut r = rng::derive(9, "gbm-mc", 0);
        let x: Vec<Vec<f64>> = (0..150)
            .map(|_| vec![r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)])
            .collect();
        let y: Vec<usize> = x
            .iter()
            .map(|v| {
                if v[0] < 0.33 {
                    0
                } else if v[0] < 0.66 {
                    1
                } else {
                    2
                }
            })
            .collect();
        let model = Gbm::fit(&x, &y, 3, 20, 0.2, 3);
        for xi in x.iter().take(20) {
            let p = model.predict_proba(xi);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let acc = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| {
                let p = model.predict_proba(xi);
                let pred = p
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap()
                    .0;
                pred == yi
            })
            .count() as f64
            / y.len() as f64;
        assert!(acc > 0.9, "multiclass accuracy {acc}");
    }
}
