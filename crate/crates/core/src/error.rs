use thiserror::Error;

pub type Result<T> = std::result::Result<T, ToaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToaError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The sampling is too coarse for the requested oscillation; evaluating
    /// anyway would alias silently.
    #[error("resolution guard: phase advance {phase:.4} rad per step exceeds {limit:.4} rad ({context})")]
    Resolution {
        phase: f64,
        limit: f64,
        context: String,
    },

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("state not in operator domain: {0}")]
    NotInDomain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("tails not decayed: edge ratio {edge_ratio:.3e}, estimated tail mass {tail_mass:.3e}")]
    Tail { edge_ratio: f64, tail_mass: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
