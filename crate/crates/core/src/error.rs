use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is numerically singular: {0}")]
    Singular(String),

    #[error("unphysical quadratic form: {0}")]
    Unstable(String),

    #[error("symplectic normalization failed: {0}")]
    Normalization(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("input matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("truncation budget {budget} cannot hold {required} states")]
    Budget { budget: usize, required: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Dimension(_) => "dimension",
            Error::Singular(_) => "singular",
            Error::Unstable(_) => "unstable",
            Error::Normalization(_) => "normalization",
            Error::Convergence { .. } => "convergence",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::Budget { .. } => "budget",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }

    /// Usage-class errors map to exit status 2, numeric failures to 1.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Parse { .. } | Error::Budget { .. }
        )
    }
}
