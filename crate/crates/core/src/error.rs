use thiserror::Error;

/// Errors raised by parameter validation and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation requires a subordinator: {0}")]
    NotSubordinator(String),
    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },
    #[error("divergent moment: {0}")]
    DivergentMoment(String),
}

impl LabError {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, LabError::NotConverged { .. } | LabError::DivergentMoment(_))
    }

    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::InvalidParameter(_) => "invalid_parameter",
            LabError::NotSubordinator(_) => "not_subordinator",
            LabError::NotConverged { .. } => "not_converged",
            LabError::DivergentMoment(_) => "divergent_moment",
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidParameter(msg.into())
}
