use thiserror::Error;

/// Errors raised by the numerical and statistical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported representation: {0}")]
    Unsupported(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl LabError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidInput(msg.into())
    }

    /// Stable machine-readable tag, used in CLI error JSON and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::InvalidInput(_) => "invalid-input",
            LabError::Unsupported(_) => "unsupported-representation",
            LabError::DegenerateFit(_) => "degenerate-fit",
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn require_nonzero_x(x: f64) -> Result<()> {
    if x == 0.0 || !x.is_finite() {
        return Err(LabError::invalid(format!(
            "frequency multiplier x must be finite and nonzero, got {x}"
        )));
    }
    Ok(())
}
