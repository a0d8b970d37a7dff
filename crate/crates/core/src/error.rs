use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates the invariant of the type or operation that owns it.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// The Riesz form degenerates at alpha = 2.
    #[error("alpha = 2 is degenerate for the Riesz prefactor; local branch required")]
    LocalBranchRequired,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("boundary condition violated: {0}")]
    BoundaryViolation(String),

    /// A computed error budget exceeds the requested tolerance.
    #[error("{operation}: tolerance exceeded ({detail})")]
    Tolerance { operation: String, detail: String },

    #[error("{operation}: eta extrapolation is non-monotone ({detail})")]
    NonMonotoneExtrapolation { operation: String, detail: String },

    #[error("point x = {x} lies outside the reliable window |x| <= {window}")]
    OutsideReliableWindow { x: f64, window: f64 },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn tolerance(operation: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Tolerance {
            operation: operation.into(),
            detail: detail.into(),
        }
    }

    /// True for failures of a numerical tolerance rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Tolerance { .. }
                | Error::NonMonotoneExtrapolation { .. }
                | Error::OutsideReliableWindow { .. }
        )
    }
}
