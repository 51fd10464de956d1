//! Row-major numeric dataset used by the learner implementations.

use crate::stream::TrainView;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn from_view(view: &TrainView, n_classes: usize) -> Self {
        let x = view.rows.iter().map(|r| r.instance.features.clone()).collect();
        let y = view.rows.iter().map(|r| r.instance.label).collect();
        Dataset { x, y, n_classes }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Distinct labels present.
    pub fn present_classes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_classes];
        for &y in &self.y {
            seen[y] = true;
        }
        (0..self.n_classes).filter(|&c| seen[c]).collect()
    }
}
