//! Data-driven hyperparameter tuning for three parameterized algorithm
//! families: linkage clustering, RBF-graph semi-supervised learning and
//! regularized logistic regression.
//!
//! Each family exposes a utility or loss as a function of its
//! hyperparameters. The [`tune`] module selects parameters from samples of
//! instances, [`online`] learns them over a stream, and [`bounds`] evaluates
//! the pseudo-dimension and sample-complexity formulas for the families.

// `!(x > 0.0)` is how NaN gets rejected alongside the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the recurrences they implement.
#![allow(clippy::needless_range_loop)]

pub mod acceptance;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod instances;
pub mod linkage;
pub mod numerics;
pub mod logreg;
pub mod online;
pub mod output;
pub mod param;
pub mod ssl;
pub mod tune;

pub use error::{Error, Result};
