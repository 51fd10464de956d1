//! Random forests: a bagged classification forest with sqrt(d) feature
//! subsampling per split, and a small regression forest used as the SMBO
//! surrogate (per-tree spread doubles as the uncertainty estimate).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, RegTree};
use crate::rng;

fn bootstrap(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

fn sqrt_features(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).clamp(1, d)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    pub n_classes: usize,
    pub max_depth: usize,
    seed: u64,
    /// Monotone counter so appended trees draw fresh bootstrap streams.
    next_tree_id: u64,
}

impl RandomForest {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        n_trees: usize,
        max_depth: usize,
        seed: u64,
    ) -> Self {
        let mut forest = RandomForest {
            trees: Vec::with_capacity(n_trees),
            n_classes,
            max_depth,
            seed,
            next_tree_id: 0,
        };
        forest.grow(x, y, n_trees);
        forest
    }

    /// Grow `n_new` additional trees on (possibly new) data; existing trees
    /// are untouched.
    pub fn grow(&mut self, x: &[Vec<f64>], y: &[usize], n_new: usize) {
        let d = x[0].len();
        let sub = sqrt_features(d);
        for _ in 0..n_new {
            let mut tree_rng = rng::derive(self.seed, "rf-tree", self.next_tree_id);
            self.next_tree_id += 1;
            let idx = bootstrap(x.len(), &mut tree_rng);
            self.trees.push(DecisionTree::fit(
                x,
                y,
                self.n_classes,
                self.max_depth,
                Some(sub),
                Some(&mut tree_rng),
                &idx,
            ));
        }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn tree(&self, i: usize) -> &DecisionTree {
        &self.trees[i]
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.predict_dist(x)) {
                *a += p;
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            for a in acc.iter_mut() {
                *a /= total;
            }
        }
        acc
    }
}

/// Bagged regression forest; predicts a mean and the across-tree variance.
#[derive(Debug, Clone)]
pub struct RegForest {
    trees: Vec<RegTree>,
}

impl RegForest {
    pub fn fit(
        x: &[Vec<f64>],
        targets: &[f64],
        n_trees: usize,
        max_depth: usize,
        seed: u64,
    ) -> Self {
        let d = x[0].len();
        let sub = sqrt_features(d).max(d / 3);
        let mut trees = Vec::with_capacity(n_trees);
        for t in 0..n_trees {
            let mut tree_rng = rng::derive(seed, "regforest-tree", t as u64);
            let idx = bootstrap(x.len(), &mut tree_rng);
            trees.push(RegTree::fit(
                x,
                targets,
                None,
                max_depth,
                Some(sub),
                Some(&mut tree_rng),
                &idx,
            ));
        }
        RegForest { trees }
    }

    pub fn predict_mean_var(&self, x: &[f64]) -> (f64, f64) {
        let n = self.trees.len() as f64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for tree in &self.trees {
            let p = tree.predict(x);
            sum += p;
            sum_sq += p * p;
        }
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        (mean, var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_data() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = rng::derive(5, "blob", 0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let c = i % 2;
            let center = if c == 0 { 0.0 } else { 3.0 };
            x.push(vec![
                center + rng.gen_range(-1.0..1.0),
                center + rng.gen_range(-1.0..1.0),
            ]);
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn forest_learns_blobs() {
        let (x, y) = blob_data();
        let forest = RandomForest::fit(&x, &y, 2, 25, 6, 3);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| {
                let p = forest.predict_proba(xi);
                usize::from(p[1] > p[0]) == yi
            })
            .count();
        assert!(correct as f64 / y.len() as f64 >= 0.95);
    }

    #[test]
    fn grow_appends_without_touching_existing_trees() {
        let (x, y) = blob_data();
        let mut forest = RandomForest::fit(&x, &y, 2, 10, 4, 3);
        let before = serde_json::to_string(forest.tree(9)).unwrap();
        forest.grow(&x, &y, 5);
        assert_eq!(forest.n_trees(), 15);
        assert_eq!(serde_json::to_string(forest.tree(9)).unwrap(), before);
    }

    #[test]
    fn reg_forest_tracks_mean() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 10.0]).collect();
        let t: Vec<f64> = x.iter().map(|v| v[0] * 2.0).collect();
        let forest = RegForest::fit(&x, &t, 30, 6, 9);
        let (mean, var) = forest.predict_mean_var(&[5.0]);
        assert!((mean - 10.0).abs() < 1.0, "mean {mean}");
        assert!(var >= 0.0);
    }
}
