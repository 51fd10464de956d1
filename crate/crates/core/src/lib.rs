//! AutoML pipeline search on evolving data streams.
//!
//! The crate combines three pieces: miniature CASH optimizers (random search
//! with stacking, sequential model-based optimization with greedy ensemble
//! selection, and asynchronous-style evolution), an EDDM drift detector over
//! the deployed model's error stream, and six adaptation strategies that
//! decide when and how pipelines are retrained as batches arrive. Streams are
//! consumed batch by batch under test-then-train evaluation with a sliding
//! window as the forgetting mechanism.

pub mod adapt;
pub mod audit;
pub mod baselines;
pub mod detect;
pub mod error;
pub mod eval;
pub mod generators;
pub mod learners;
pub mod plot;
pub mod rng;
pub mod search;
pub mod space;
pub mod stream;

pub use error::{Error, Result};
