//! Worst-case error analysis for attribute-based zero-shot classification.
//!
//! Given a class-attribute matrix (per-class probabilities of exhibiting
//! each binary attribute), this crate computes the tight worst-case Bayes
//! error over all joint distributions consistent with the matrix, constructs
//! the adversarial distributions and minimax classifiers that witness the
//! bound, and provides a cheaper matching-based lower bound, synthetic data
//! generation, and confusion/skewness analysis tooling.

pub mod analysis;
pub mod binary;
pub mod error;
pub mod exact;
pub mod lp;
pub mod matching;
pub mod matrix;
pub mod minimax;
pub mod pmf;
pub mod synthetic;
pub mod util;

pub use error::{Error, Result};
pub use matrix::{AttributeOutcome, ClassAttributeMatrix, ClassPriors, Entry, SelectionMask};
