use std::path::PathBuf;

use crate::repair::ViolationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid dissimilarity matrix: {0}")]
    InvalidDissimilarity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("metric repair did not reach a fixpoint after {iterations} iterations ({} violations, max slack {:.3e})", report.count, report.max_slack)]
    FixpointNotReached {
        iterations: usize,
        report: ViolationReport,
    },

    #[error("largest connected component has {size} points, need at least {required} for a {dim}-dimensional embedding")]
    EmptyComponent {
        size: usize,
        required: usize,
        dim: usize,
    },

    #[error("reference configuration has zero centered norm")]
    DegenerateReference,

    #[error("infeasible theory parameters: {0}")]
    Infeasible(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    /// True for errors raised by a numerical stage on otherwise well-formed
    /// input, as opposed to bad arguments or unreadable files.
    pub fn is_pipeline_failure(&self) -> bool {
        matches!(
            self,
            Error::FixpointNotReached { .. } | Error::EmptyComponent { .. } | Error::Eigen(_)
        )
    }
}
