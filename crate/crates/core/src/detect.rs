//! EDDM drift detector over a model's per-instance correctness stream.
//!
//! The detector tracks the running mean p and standard deviation s of the
//! distances (in instances) between consecutive misclassifications and the
//! historical peak of p + 2s. Errors spaced more closely than usual pull
//! (p + 2s) / (p_max + 2 s_max) below the alpha threshold, which signals
//! drift and resets the state. Peak tracking and alarms are held back until
//! the distance estimate has stabilized (`stabilization_distances`); at the
//! default alpha of 0.95 the detection margin is only 5%, smaller than the
//! sampling noise of the statistic over its first few hundred distances, so
//! alarming earlier would be noise-driven.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Stable,
    Drift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EddmConfig {
    /// Drift threshold on (p + 2s) / (p_max + 2 s_max).
    pub alpha: f64,
    /// Errors required before any alarm.
    pub min_errors: usize,
    /// Distances required before peak tracking and alarms activate.
    pub stabilization_distances: usize,
}

impl Default for EddmConfig {
    fn default() -> Self {
        EddmConfig {
            alpha: 0.95,
            min_errors: 30,
            stabilization_distances: 1000,
        }
    }
}

impl EddmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eddm alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Running statistics between resets. Distances are accumulated with
/// Welford updates; the reported standard deviation is the population form.
#[derive(Debug, Clone)]
pub struct EddmState {
    pub config: EddmConfig,
    pub error_count: usize,
    last_error_position: Option<usize>,
    /// Most recent position over the whole stream (never reset): positions
    /// must be strictly increasing across calls.
    last_position: Option<usize>,
    n_distances: usize,
    mean: f64,
    m2: f64,
    peak: f64,
}

impl EddmState {
    pub fn new(config: EddmConfig) -> Self {
        EddmState {
            config,
            error_count: 0,
            last_error_position: None,
            last_position: None,
            n_distances: 0,
            mean: 0.0,
            m2: 0.0,
            peak: 0.0,
        }
    }

    /// Running mean distance between errors (p_i).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Running population standard deviation of the distances (s_i).
    pub fn std(&self) -> f64 {
        if self.n_distances == 0 {
            0.0
        } else {
            (self.m2 / self.n_distances as f64).sqrt()
        }
    }

    /// Historical peak of p + 2s since the last reset.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn n_distances(&self) -> usize {
        self.n_distances
    }

    fn reset(&mut self) {
        self.error_count = 0;
        self.last_error_position = None;
        self.n_distances = 0;
        self.mean = 0.0;
        self.m2 = 0.0;
        self.peak = 0.0;
    }

    /// Feed one prediction outcome at a stream position. Returns `Drift`
    /// when the alarm fires, after which the state is back to initial.
    pub fn update(&mut self, correct: bool, position: usize) -> Result<Signal> {
        if let Some(last) = self.last_position {
            if position <= last {
                return Err(Error::NonIncreasingPosition { pos: position, last });
            }
        }
        self.last_position = Some(position);
        if correct {
            return Ok(Signal::Stable);
        }
        self.error_count += 1;
        let Some(prev) = self.last_error_position else {
            self.last_error_position = Some(position);
            return Ok(Signal::Stable);
        };
        let distance = (position - prev) as f64;
        self.last_error_position = Some(position);
        self.n_distances += 1;
        let delta = distance - self.mean;
        self.mean += delta / self.n_distances as f64;
        self.m2 += delta * (distance - self.mean);

        if self.n_distances < self.config.stabilization_distances {
            return Ok(Signal::Stable);
        }
        let t = self.mean + 2.0 * self.std();
        if t > self.peak {
            self.peak = t;
            return Ok(Signal::Stable);
        }
        if self.error_count >= self.config.min_errors && self.peak > 0.0 {
            let ratio = t / self.peak;
            debug_assert!(ratio > 0.0 && ratio <= 1.0);
            if ratio < self.config.alpha {
                self.reset();
                return Ok(Signal::Drift);
            }
        }
        Ok(Signal::Stable)
    }
}
