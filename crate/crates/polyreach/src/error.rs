use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("LP solver failed to converge within {iterations} iterations")]
    SolverFailure { iterations: usize },

    #[error("unbounded polytope")]
    UnboundedPolytope,

    #[error("empty polytope")]
    EmptyPolytope,

    #[error("vertex enumeration over {rows} constraints in dimension {dim} exceeds the work budget")]
    VertexBudget { rows: usize, dim: usize },

    #[error("piece count {count} exceeds cap {cap}; rerun in hull mode to keep one polytope per step")]
    PieceCapExceeded { count: usize, cap: usize },

    #[error("model error: {0}")]
    Model(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
