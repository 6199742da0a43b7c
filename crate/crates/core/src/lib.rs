//! Positive definite binary quadratic forms, Dirichlet composition, and a
//! numerical harness for sums of arithmetic weights over values of a form.

pub mod arithmetic;
pub mod bqf;
pub mod composition;
pub mod error;
pub mod harness;
pub mod numtheory;

pub use bqf::{Form, UnimodularMap};
pub use composition::CompositionContext;
pub use error::{Error, Result};
