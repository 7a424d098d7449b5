use thiserror::Error;

/// Errors raised across the clock, Wiener and chain layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a grid (or a shape) do not.
    #[error("structural mismatch: {0}")]
    Structure(String),

    /// A declared invariant (monotonicity, floor, rate bound, ...) fails.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A time-changed evaluation falls outside the range covered by a path.
    #[error("range exceeded at node {node} (t = {t})")]
    OutOfRange { node: usize, t: f64 },

    /// Argument outside the domain of a closed-form map.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Step size times Lipschitz bound is not below one.
    #[error("contraction violated at step {step}: step * lipschitz = {value}")]
    Contraction { step: usize, value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structure(msg: impl Into<String>) -> Error {
    Error::Structure(msg.into())
}

pub(crate) fn invariant(msg: impl Into<String>) -> Error {
    Error::Invariant(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
