//! k-nearest-neighbor classifier with Euclidean distance. Distance ties are
//! broken by training-row order so predictions are deterministic.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub n_classes: usize,
    x_train: Vec<Vec<f64>>,
    y_train: Vec<usize>,
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, k: usize) -> Self {
        Knn {
            k: k.clamp(1, x.len()),
            n_classes,
            x_train: x.to_vec(),
            y_train: y.to_vec(),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut dists: Vec<(f64, usize)> = self
            .x_train
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let d: f64 = t.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        let k = self.k.min(dists.len());
        dists.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; self.n_classes];
        for (_, i) in &dists[..k] {
            votes[self.y_train[*i]] += 1.0;
        }
        for v in votes.iter_mut() {
            *v /= k as f64;
        }
        votes
    }
}
