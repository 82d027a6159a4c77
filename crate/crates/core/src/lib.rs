//! Fairness-aware node unlearning for graph convolutional networks.
//!
//! The pipeline has two phases. Training pre-fits a sensitive-attribute
//! estimator, then trains a two-layer GCN classifier against an adversary
//! and a covariance penalty so that predictions stay independent of the
//! estimated sensitive attribute. Unlearning scores every classifier
//! parameter by the diagonal Fisher information of the training set and of
//! the forget set, and shrinks the parameters that are specialised to the
//! forget set.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod error;
pub mod graph;
pub mod nn;
pub mod checkpoint;
pub mod estimator;
pub mod experiment;
pub mod fair_train;
pub mod fixtures;
pub mod metrics;
pub mod unlearn;
mod rng;

pub use error::{Error, Result};
