use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the toolkit.
///
/// Variants map onto the failure classes each operation can report; the
/// scenario runner turns `Finding`-like variants into exit status 1 and the
/// rest into exit status 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error at {point:?}: {reason}")]
    Domain { point: Vec<f64>, reason: String },

    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    Metric { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("radius error: {0}")]
    Radius(String),

    #[error("no connecting path inside the chart box: {0}")]
    Connectivity(String),

    #[error("map is not an immersion at node {node}: {detail}")]
    Immersion { node: usize, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{message} (residual history {history:?})")]
    Convergence { message: String, history: Vec<f64> },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("certificate rejected: {message} (worst point {worst_point:?}, margin {margin:e})")]
    Certificate {
        message: String,
        worst_point: Vec<f64>,
        margin: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(point: &[f64], reason: impl Into<String>) -> Self {
        Error::Domain {
            point: point.to_vec(),
            reason: reason.into(),
        }
    }

    /// True for errors that represent a failed mathematical check rather
    /// than bad input or a numerical breakdown.
    pub fn is_finding(&self) -> bool {
        matches!(self, Error::Certificate { .. })
    }
}
