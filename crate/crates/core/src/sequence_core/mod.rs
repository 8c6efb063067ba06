//! Eigenvalue sequences and membership in the condensation class.
//!
//! An [`EigenSequence`] is a cheaply clonable handle to a lazy term
//! generator. Terms are memoized per precision, and real rational
//! generators additionally expose their terms exactly so that class checks
//! can run in rational arithmetic.

mod class;
mod params;
mod sequence;

pub use class::{check_class, fit_index_bound, ClassReport, CheckStatus, Hypothesis, HypothesisCheck, IndexBoundFit, Witness};
pub use params::{
    derive_params_from_gap, derive_params_real, derive_params_real_exact, ClassParameters, ExactParameters,
};
pub use sequence::{
    condensation_product, counting_function, counting_function_exact, merge_increasing, EigenSequence,
    ExplicitSource, Origin, TermSource,
};

use thiserror::Error;

use crate::mp_numerics::NumericsError;

/// Errors raised while generating or inspecting sequences.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("sequence has only {available} terms, {requested} requested")]
    PrefixExhausted { requested: usize, available: usize },
    #[error("terms {k} and {n} coincide")]
    DegenerateSequence { k: usize, n: usize },
    #[error("term {index_a} of the first sequence equals term {index_b} of the second")]
    DuplicateTerm { index_a: usize, index_b: usize },
    #[error("invalid sequence input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
