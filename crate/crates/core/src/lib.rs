//! Generalization-bound machinery: PAC-Bayesian deviation and relative bounds,
//! transductive and inductive Vapnik-type bounds, exact Gibbs posteriors on a
//! multi-threshold classification model, and a kernel SVM dual solver with
//! margin-based complexity bounds.

pub mod bound_math;
pub mod error;
pub mod inductive;
pub mod optim;
pub mod relative;
pub mod report;
pub mod reproduce;
pub mod svm;
pub mod threshold;
pub mod transductive;

pub use error::{Error, Result};
pub use report::BoundReport;
