use thiserror::Error;

use crate::bqf::Form;

/// Errors raised by the library.
///
/// Variants split into two families: input validation (bad forms, broken
/// preconditions, range problems) and internal invariant failures, which
/// indicate a bug or a search that could not complete. The CLI maps the
/// first family to exit code 1 and the second to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("form {0} is not positive definite")]
    NotPositiveDefinite(Form),

    #[error("form {0} is not primitive")]
    NotPrimitive(Form),

    #[error("invalid discriminant {0}: must be negative and congruent to 0 or 1 mod 4")]
    InvalidDiscriminant(i128),

    #[error("discriminant mismatch: {0} has {1}, {2} has {3}")]
    DiscriminantMismatch(Form, i128, Form, i128),

    #[error("map ({0},{1};{2},{3}) does not have determinant 1")]
    NotUnimodular(i64, i64, i64, i64),

    #[error("composition gcd condition fails: gcd(a, alpha, (b+beta)/2) = {gcd} for {f} and {big_f}")]
    CompositionGcd { f: Form, big_f: Form, gcd: i64 },

    #[error("B = {b} fails congruence {congruence}")]
    Congruence { b: String, congruence: String },

    #[error("inexact division: {0}")]
    InexactDivision(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("prime search exhausted after {budget} candidate points for class of {form}")]
    SearchExhausted { form: Form, budget: usize },

    #[error("inconsistent congruence system: {0}")]
    InconsistentSystem(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("sieve limit {limit} needs {bytes} bytes, above the budget of {budget} bytes")]
    MemoryBudget { limit: u64, bytes: u64, budget: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("table file: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that indicate a broken internal invariant rather
    /// than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::SearchExhausted { .. } | Error::InconsistentSystem(_) | Error::Verification(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
