//! Gaussian naive Bayes with variance smoothing.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianNb {
    pub n_classes: usize,
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, var_smoothing: f64) -> Self {
        let n = x.len();
        let d = x[0].len();
        let mut counts = vec![0usize; n_classes];
        let mut means = vec![vec![0.0; d]; n_classes];
        for (xi, &yi) in x.iter().zip(y) {
            counts[yi] += 1;
            for (m, v) in means[yi].iter_mut().zip(xi) {
                *m += v;
            }
        }
        for (c, count) in counts.iter().enumerate() {
            if *count > 0 {
                for m in means[c].iter_mut() {
                    *m /= *count as f64;
                }
            }
        }
        let mut vars = vec![vec![0.0; d]; n_classes];
        for (xi, &yi) in x.iter().zip(y) {
            for j in 0..d {
                let diff = xi[j] - means[yi][j];
                vars[yi][j] += diff * diff;
            }
        }
        // overall max feature variance anchors the smoothing scale
        let mut global_var: f64 = 0.0;
        for j in 0..d {
            let mean_j: f64 = x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var_j: f64 =
                x.iter().map(|r| (r[j] - mean_j).powi(2)).sum::<f64>() / n as f64;
            global_var = global_var.max(var_j);
        }
        let floor = (var_smoothing * global_var).max(1e-12);
        for (c, count) in counts.iter().enumerate() {
            for v in vars[c].iter_mut() {
                if *count > 0 {
                    *v /= *count as f64;
                }
                *v += floor;
            }
        }
        let log_priors = counts
            .iter()
            .map(|&c| ((c as f64 + 1.0) / (n as f64 + n_classes as f64)).ln())
            .collect();
        GaussianNb {
            n_classes,
            log_priors,
            means,
            vars,
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut log_post = self.log_priors.clone();
        for (c, post) in log_post.iter_mut().enumerate() {
            for (j, &v) in x.iter().enumerate() {
                let var = self.vars[c][j];
                let diff = v - self.means[c][j];
                *post += -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + diff * diff / var);
            }
        }
        let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for p in log_post.iter_mut() {
            *p = (*p - max).exp();
            sum += *p;
        }
        for p in log_post.iter_mut() {
            *p /= sum;
        }
        log_post
    }
}
