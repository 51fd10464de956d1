//! CART-style trees: Gini classification trees and squared-error regression
//! trees with Newton leaf values for boosting. Numeric splits are placed at
//! midpoints between consecutive distinct values; minimum leaf size is 2.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MIN_LEAF: usize = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node {
    Leaf { dist: Vec<f64> },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    pub n_classes: usize,
}

struct ClsBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    n_feature_sub: Option<usize>,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

impl<'a> ClsBuilder<'a> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let mut dist = vec![0.0; self.n_classes];
        for &i in idx {
            dist[self.y[i]] += 1.0;
        }
        let total: f64 = dist.iter().sum();
        if total > 0.0 {
            for v in dist.iter_mut() {
                *v /= total;
            }
        }
        self.nodes.push(Node::Leaf { dist });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        match self.n_feature_sub {
            Some(k) if k < d => {
                let rng = self.rng.as_deref_mut().expect("subsampling needs an rng");
                let mut all: Vec<usize> = (0..d).collect();
                all.shuffle(rng);
                let mut sub = all[..k].to_vec();
                sub.sort_unstable();
                sub
            }
            _ => (0..d).collect(),
        }
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        let first = self.y[idx[0]];
        let pure = idx.iter().all(|&i| self.y[i] == first);
        if depth == 0 || n < 2 * MIN_LEAF || pure {
            return self.leaf(idx);
        }
        let features = self.candidate_features();
        let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
        let total_counts = {
            let mut c = vec![0usize; self.n_classes];
            for &i in idx.iter() {
                c[self.y[i]] += 1;
            }
            c
        };
        for &f in &features {
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_counts = vec![0usize; self.n_classes];
            for i in 1..n {
                left_counts[pairs[i - 1].1] += 1;
                if pairs[i].0 <= pairs[i - 1].0 {
                    continue;
                }
                let nl = i;
                let nr = n - i;
                if nl < MIN_LEAF || nr < MIN_LEAF {
                    continue;
                }
                // minimized weighted Gini, expressed as a maximized score
                let mut sl = 0.0;
                let mut sr = 0.0;
                for c in 0..self.n_classes {
                    let l = left_counts[c] as f64;
                    let r = (total_counts[c] - left_counts[c]) as f64;
                    sl += l * l;
                    sr += r * r;
                }
                let score = sl / nl as f64 + sr / nr as f64;
                if best.is_none_or(|(b, _, _)| score > b) {
                    let threshold = 0.5 * (pairs[i - 1].0 + pairs[i].0);
                    best = Some((score, f, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(idx);
        };
        let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        if left_idx.is_empty() || right_idx.is_empty() {
            return self.leaf(idx);
        }
        let node_pos = self.nodes.len();
        self.nodes.push(Node::Leaf { dist: Vec::new() }); // placeholder
        let left = self.build(&mut left_idx, depth - 1);
        let right = self.build(&mut right_idx, depth - 1);
        self.nodes[node_pos] = Node::Split { feature, threshold, left, right };
        node_pos
    }
}

impl DecisionTree {
    /// Fit a classification tree on the rows selected by `idx`.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        max_depth: usize,
        n_feature_sub: Option<usize>,
        rng: Option<&mut ChaCha8Rng>,
        idx: &[usize],
    ) -> Self {
        assert!(!idx.is_empty());
        let mut b = ClsBuilder {
            x,
            y,
            n_classes,
            n_feature_sub,
            rng,
            nodes: Vec::new(),
        };
        let mut idx = idx.to_vec();
        let root = b.build(&mut idx, max_depth);
        debug_assert_eq!(root, 0);
        DecisionTree { nodes: b.nodes, n_classes }
    }

    pub fn predict_dist(&self, x: &[f64]) -> &[f64] {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                Node::Leaf { dist } => return dist,
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum RegNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Regression tree. Leaf values are sum(target)/sum(weight), which yields the
/// mean for unit weights and a Newton step when weights are Hessians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    nodes: Vec<RegNode>,
}

const LEAF_CLAMP: f64 = 50.0;

struct RegBuilder<'a> {
    x: &'a [Vec<f64>],
    t: &'a [f64],
    w: Option<&'a [f64]>,
    n_feature_sub: Option<usize>,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<RegNode>,
}

impl<'a> RegBuilder<'a> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let sum_t: f64 = idx.iter().map(|&i| self.t[i]).sum();
        let sum_w: f64 = match self.w {
            Some(w) => idx.iter().map(|&i| w[i]).sum(),
            None => idx.len() as f64,
        };
        let value = (sum_t / sum_w.max(1e-12)).clamp(-LEAF_CLAMP, LEAF_CLAMP);
        self.nodes.push(RegNode::Leaf { value });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        match self.n_feature_sub {
            Some(k) if k < d => {
                let rng = self.rng.as_deref_mut().expect("subsampling needs an rng");
                let mut all: Vec<usize> = (0..d).collect();
                all.shuffle(rng);
                let mut sub = all[..k].to_vec();
                sub.sort_unstable();
                sub
            }
            _ => (0..d).collect(),
        }
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let n = idx.len();
        if depth == 0 || n < 2 * MIN_LEAF {
            return self.leaf(idx);
        }
        let features = self.candidate_features();
        let total_sum: f64 = idx.iter().map(|&i| self.t[i]).sum();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        for &f in &features {
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[i][f], self.t[i])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for i in 1..n {
                left_sum += pairs[i - 1].1;
                if pairs[i].0 <= pairs[i - 1].0 {
                    continue;
                }
                let nl = i;
                let nr = n - i;
                if nl < MIN_LEAF || nr < MIN_LEAF {
                    continue;
                }
                let right_sum = total_sum - left_sum;
                // SSE reduction up to constants: max of sum^2/n parts
                let score =
                    left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64;
                if best.is_none_or(|(b, _, _)| score > b) {
                    let threshold = 0.5 * (pairs[i - 1].0 + pairs[i].0);
                    best = Some((score, f, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(idx);
        };
        let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        if left_idx.is_empty() || right_idx.is_empty() {
            return self.leaf(idx);
        }
        let node_pos = self.nodes.len();
        self.nodes.push(RegNode::Leaf { value: 0.0 });
        let left = self.build(&mut left_idx, depth - 1);
        let right = self.build(&mut right_idx, depth - 1);
        self.nodes[node_pos] = RegNode::Split { feature, threshold, left, right };
        node_pos
    }
}

impl RegTree {
    pub fn fit(
        x: &[Vec<f64>],
        targets: &[f64],
        weights: Option<&[f64]>,
        max_depth: usize,
        n_feature_sub: Option<usize>,
        rng: Option<&mut ChaCha8Rng>,
        idx: &[usize],
    ) -> Self {
        assert!(!idx.is_empty());
        let mut b = RegBuilder {
            x,
            t: targets,
            w: weights,
            n_feature_sub,
            rng,
            nodes: Vec::new(),
        };
        let mut idx = idx.to_vec();
        b.build(&mut idx, max_depth);
        RegTree { nodes: b.nodes }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}
