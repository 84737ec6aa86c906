use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// A start or goal point (or a margin-shrunk cell) cannot host the query.
    #[error("infeasible query: {0}")]
    Query(String),

    #[error("solver failed: {message} (primal residual {primal:.3e}, dual residual {dual:.3e})")]
    Numeric {
        message: String,
        primal: f64,
        dual: f64,
    },

    /// Search stopped at a node-count cap before proving optimality.
    #[error("resource limit reached after {nodes} nodes: best length {best:?}, lower bound {bound:.6}")]
    Resource {
        nodes: usize,
        best: Option<f64>,
        bound: f64,
    },

    /// A structured document parsed but describes an impossible object.
    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}
