use thiserror::Error;

/// Errors raised by the design, estimation, and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Observed data violate a schema or structural requirement.
    #[error("data error: {0}")]
    Data(String),
    /// A model fit failed (singularity, separation, non-convergence).
    #[error("fit error: {0}")]
    Fit(String),
    /// A numerical routine failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
