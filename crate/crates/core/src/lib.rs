//! Sequential truth learning on networks.
//!
//! Agents act one at a time in a decision order, each combining a noisy
//! private signal with the actions of earlier neighbors. This crate builds
//! graphs and orderings, runs majority-rule and exact Bayesian cascades,
//! estimates learning rates, and evaluates the closed-form bounds.

pub mod analysis;
pub mod decision;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod ordering;
pub mod rng;
pub mod simulate;

pub use decision::{run_cascade, Accuracy, ActionVector, Decider, Model, ModelConfig, SignalVector};
pub use error::{Error, Result};
pub use graph::Graph;
pub use ordering::{Ordering, Strategy};
pub use simulate::{estimate_learning, exact_learning_rate, LearningReport, MonteCarlo};
