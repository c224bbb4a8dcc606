//! Pooling quantum states of knowledge.
//!
//! Classical Bayesian pooling, multi-observer measurement histories, the
//! support-intersection consistency test, the tripartite construction that
//! realizes any common state, and Bayesian estimation over the unitarily
//! invariant pure-state prior.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod estimation;
pub mod fusion;
pub mod error;
pub mod haar;
pub mod linalg;
pub mod measurement;
pub mod montecarlo;
pub mod stats;

pub use error::{Error, Result};
