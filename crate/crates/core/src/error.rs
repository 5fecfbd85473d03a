use thiserror::Error;

/// Errors raised by the model and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WgmError {
    /// An argument lies outside the domain the model supports.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method did not produce a trustworthy answer.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Root bracketing failed; carries the last interval inspected.
    #[error("no root bracketed in [{lo}, {hi}]: {reason}")]
    Bracket { lo: f64, hi: f64, reason: String },

    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl WgmError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        WgmError::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        WgmError::Numeric(msg.into())
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        WgmError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = WgmError> = std::result::Result<T, E>;
