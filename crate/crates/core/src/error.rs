use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: orbital index {index} outside [0, {norb}]")]
    IndexRange { line: usize, index: i64, norb: usize },

    #[error("symmetry violated: {0}")]
    Symmetry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("unsupported size: {0}")]
    Capability(String),

    #[error("non-finite cost at iteration {iteration}")]
    NonFinite { iteration: usize, last: Vec<f64> },

    #[error("greedy decomposition stagnated with residual {residual:e}")]
    Stagnation { residual: f64 },

    #[error("eigenvalue iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical routines (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Stagnation { .. }
                | Error::NoConvergence { .. }
                | Error::LinearProgram(_)
        )
    }
}
