use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Snapshot of the last finite training state, attached to [`Error::Divergence`].
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceState {
    pub step: usize,
    pub last_finite_loss: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub lambda: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("corrupt payload: header implies {expected} bytes, found {found}")]
    CorruptPayload { expected: usize, found: usize },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("io error on {path:?}: {source}")]
    Io {
        path: Option<PathBuf>,
        #[source]
        source: std::io::Error,
    },
    #[error("degenerate volume: {0}")]
    DegenerateVolume(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid step {0}: steps must be non-negative")]
    InvalidStep(i64),
    #[error("training diverged at step {}: last finite loss {}", .0.step, .0.last_finite_loss)]
    Divergence(Box<DivergenceState>),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: Some(path.into()), source }
    }

    /// Process exit code for the CLI: 1 property failure, 2 invalid input, 3 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Divergence(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io { path: None, source }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
