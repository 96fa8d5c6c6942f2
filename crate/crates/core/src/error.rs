use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("top eigenvalue is not simple (second eigenvalue {second}); the model is not connected")]
    Connectivity { second: f64 },

    #[error("cluster intervals of half-width {eps} overlap (minimal half-gap {half_gap})")]
    OverlappingClusters { eps: f64, half_gap: f64 },

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("operation requires a {expected} operator")]
    WrongKind { expected: &'static str },

    #[error("fit window is empty: {0}")]
    EmptyWindow(String),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
