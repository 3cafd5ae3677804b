use thiserror::Error;

/// Errors raised by the contraction routines and their file front ends.
#[derive(Debug, Error)]
pub enum Error {
    /// A linear system was rank deficient beyond the configured threshold.
    #[error("singular matrix (reciprocal condition {rcond:.3e})")]
    SingularMatrix { rcond: f64 },

    /// An iterative method ran out of terms before its tail bound dropped below tolerance.
    ///
    /// `positive_invariant` is set by channel contraction when the sector-1 map keeps a
    /// trace-preserved positive subspace, which makes divergence certain.
    #[error("not converged after {terms} terms (tail estimate {tail:.3e}, positive_invariant={positive_invariant})")]
    NotConverged {
        terms: usize,
        tail: f64,
        positive_invariant: bool,
    },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The resolvent form was requested for an operator pair whose series does not converge.
    #[error("resolvent requested but the defining series does not converge; the resolvent value is not the contraction")]
    DefinitionMismatch,

    #[error("invalid graph contraction spec: {0}")]
    InvalidSpec(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("malformed input: field `{field}`: {message}")]
    Format { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures that are mathematical in nature (non-convergence, resonance, a
    /// divergent defining series) rather than caused by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::SingularMatrix { .. } | Error::DefinitionMismatch
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
