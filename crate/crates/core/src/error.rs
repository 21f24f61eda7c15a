use thiserror::Error;

use crate::svm::DualSolution;

/// Errors raised by the bound calculators, the threshold model and the SVM solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("capacity exceeded: enumeration cost {cost:.3e} over cap {cap:.3e}")]
    Capacity { cost: f64, cap: f64 },
    #[error("sample is not linearly separable in feature space (box parameter reached {0:e})")]
    NonSeparable(f64),
    #[error("solver stopped after {iterations} iterations with KKT violation {violation:.3e}")]
    IterationLimit {
        iterations: usize,
        violation: f64,
        solution: Box<DualSolution>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
