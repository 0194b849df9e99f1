use thiserror::Error;

/// Errors shared by the fractional-calculus and reconstruction layers.
#[derive(Debug, Clone, Error)]
pub enum FracError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parameter selection failed: {0}")]
    Selection(String),

    #[error("degenerate observation: {0}")]
    DegenerateObservation(String),
}

impl FracError {
    pub fn domain(msg: impl Into<String>) -> Self {
        FracError::Domain(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        FracError::Numeric(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        FracError::Config(msg.into())
    }
    pub fn selection(msg: impl Into<String>) -> Self {
        FracError::Selection(msg.into())
    }
}
