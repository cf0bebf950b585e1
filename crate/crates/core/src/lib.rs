//! Positive-unlabeled (PU) learning built on semi-supervised metric-based
//! fuzzy clustering.
//!
//! The crate is organised around the stages of a PU experiment:
//!
//! - [`dataset`]: CSV loading, standardization, stratified folds and PU masking.
//! - [`smuc`]: entropy-regularized fuzzy clustering with a Mahalanobis metric
//!   learned from prior memberships.
//! - [`pufc`]: reliable negative / reliable positive / noise extraction from the
//!   clustering memberships and the final classifier stage.
//! - [`classifiers`]: the small family of binary classifiers used as the final
//!   classifier and as the spy scorer.
//! - [`baselines`]: the iterative Basic, Spy and Pruning PU learners.
//! - [`eval`]: F-measure and the cross-validation experiment protocol.
//! - [`cli`]: the batch command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod classifiers;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod pufc;
pub mod smuc;

pub use error::{Error, Result};

/// Binary class label. `Positive` is +1, `Negative` is −1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn value(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:+}", self.value())
    }
}
