use thiserror::Error;

pub type Result<T> = std::result::Result<T, FnlsError>;

#[derive(Debug, Error)]
pub enum FnlsError {
    /// Shapes, grids or derivative orders do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature validation failed: relative symbol error {error:.3e} at x = {worst_x:.6e}")]
    QuadratureValidation { worst_x: f64, error: f64 },

    #[error("no convergence after {iterations} iterations (last update {last:.3e})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        trace: Vec<f64>,
    },

    #[error("profile has negative minimum {min:.3e}")]
    NegativeProfile { min: f64 },

    #[error("degenerate iterate: {0}")]
    Degenerate(String),

    #[error("non-finite state at t = {t}")]
    NonFinite {
        t: f64,
        last_finite: Box<crate::Field>,
    },

    #[error("rejected: {0}")]
    Rejected(String),

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FnlsError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FnlsError::Domain(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        FnlsError::Structural(msg.into())
    }
}
