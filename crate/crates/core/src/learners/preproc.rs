//! Fitted preprocessor states. Statistics come only from data passed to fit
//! or partial_fit; partial_fit merges running moments. The variance filter's
//! column mask is frozen at fit time so the learner's input dimensionality
//! never changes mid-stream.

use serde::{Deserialize, Serialize};

use crate::stream::{FeatureKind, StreamSchema};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FittedPreproc {
    Impute(ImputeState),
    OneHot(OneHotState),
    Standardize(StandardizeState),
    VarianceFilter(FilterState),
}

impl FittedPreproc {
    pub fn transform(&self, rows: &mut [Vec<f64>]) {
        match self {
            FittedPreproc::Impute(s) => s.transform(rows),
            FittedPreproc::OneHot(s) => s.transform(rows),
            FittedPreproc::Standardize(s) => s.transform(rows),
            FittedPreproc::VarianceFilter(s) => s.transform(rows),
        }
    }

    /// Merge statistics from additional training rows (running-mean update).
    pub fn update(&mut self, rows: &[Vec<f64>]) {
        match self {
            FittedPreproc::Impute(s) => s.update(rows),
            FittedPreproc::Standardize(s) => s.update(rows),
            // one-hot has no statistics; the filter mask stays frozen
            FittedPreproc::OneHot(_) | FittedPreproc::VarianceFilter(_) => {}
        }
    }
}

/// Replaces NaN cells with the column mean observed during fitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImputeState {
    means: Vec<f64>,
    counts: Vec<usize>,
}

impl ImputeState {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows[0].len();
        let mut means = vec![0.0; d];
        let mut counts = vec![0usize; d];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_nan() {
                    means[j] += v;
                    counts[j] += 1;
                }
            }
        }
        for j in 0..d {
            if counts[j] > 0 {
                means[j] /= counts[j] as f64;
            }
        }
        ImputeState { means, counts }
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.means[j]
    }

    fn transform(&self, rows: &mut [Vec<f64>]) {
        for row in rows.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                if v.is_nan() {
                    *v = self.means[j];
                }
            }
        }
    }

    fn update(&mut self, rows: &[Vec<f64>]) {
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_nan() {
                    self.counts[j] += 1;
                    self.means[j] += (v - self.means[j]) / self.counts[j] as f64;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum ColMap {
    Passthrough,
    Expand { cardinality: usize },
}

/// Expands categorical code columns into indicator columns; codes outside
/// the declared cardinality (the reserved unknown code) map to all zeros.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneHotState {
    cols: Vec<ColMap>,
    out_dim: usize,
}

impl OneHotState {
    pub fn from_schema(schema: &StreamSchema) -> Self {
        let cols: Vec<ColMap> = schema
            .feature_kinds
            .iter()
            .map(|k| match k {
                FeatureKind::Numeric => ColMap::Passthrough,
                FeatureKind::Categorical { cardinality } => ColMap::Expand {
                    cardinality: *cardinality,
                },
            })
            .collect();
        let out_dim = cols
            .iter()
            .map(|c| match c {
                ColMap::Passthrough => 1,
                ColMap::Expand { cardinality } => *cardinality,
            })
            .sum();
        OneHotState { cols, out_dim }
    }

    fn transform(&self, rows: &mut [Vec<f64>]) {
        for row in rows.iter_mut() {
            let mut out = Vec::with_capacity(self.out_dim);
            for (j, col) in self.cols.iter().enumerate() {
                match col {
                    ColMap::Passthrough => out.push(row[j]),
                    ColMap::Expand { cardinality } => {
                        let code = row[j];
                        let start = out.len();
                        out.resize(start + cardinality, 0.0);
                        if code.is_finite() && code >= 0.0 && (code as usize) < *cardinality {
                            out[start + code as usize] = 1.0;
                        }
                    }
                }
            }
            *row = out;
        }
    }
}

/// Centers and scales columns to unit variance (constant columns map to 0).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizeState {
    count: usize,
    means: Vec<f64>,
    m2: Vec<f64>,
}

impl StandardizeState {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows[0].len();
        let mut s = StandardizeState {
            count: 0,
            means: vec![0.0; d],
            m2: vec![0.0; d],
        };
        s.update(rows);
        s
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.means[j]
    }

    fn std(&self, j: usize) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.m2[j] / self.count as f64).sqrt()
    }

    fn transform(&self, rows: &mut [Vec<f64>]) {
        for row in rows.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let sd = self.std(j);
                *v = if sd > 1e-12 { (*v - self.means[j]) / sd } else { 0.0 };
            }
        }
    }

    fn update(&mut self, rows: &[Vec<f64>]) {
        for row in rows {
            self.count += 1;
            for (j, &v) in row.iter().enumerate() {
                let delta = v - self.means[j];
                self.means[j] += delta / self.count as f64;
                self.m2[j] += delta * (v - self.means[j]);
            }
        }
    }
}

/// Keeps columns whose fit-time variance exceeds the threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterState {
    pub threshold: f64,
    keep: Vec<usize>,
}

impl FilterState {
    pub fn fit(rows: &[Vec<f64>], threshold: f64) -> Self {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut keep = Vec::new();
        for j in 0..d {
            let mean: f64 = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var: f64 = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            if var > threshold {
                keep.push(j);
            }
        }
        if keep.is_empty() {
            keep.push(0); // never hand the learner an empty matrix
        }
        FilterState { threshold, keep }
    }

    fn transform(&self, rows: &mut [Vec<f64>]) {
        for row in rows.iter_mut() {
            *row = self.keep.iter().map(|&j| row[j]).collect();
        }
    }
}
