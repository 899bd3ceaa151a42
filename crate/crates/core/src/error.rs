use thiserror::Error;

/// Errors raised across the pricing, network and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("range error: {0}")]
    Range(String),

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure (worst residual {worst_residual:.3e}): {message}")]
    Numerical {
        message: String,
        worst_residual: f64,
    },

    #[error("min-work condition violated at node {node}: out {out} > max(0, in {inn} + a {arrivals} - B {capacity})")]
    MinWork {
        node: usize,
        out: usize,
        inn: usize,
        arrivals: usize,
        capacity: usize,
    },

    /// Exact or exhaustive mode requested beyond its size cap.
    #[error("size cap exceeded: {0}")]
    Cap(String),

    #[error("invariant failure: {0}")]
    Invariant(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
