use thiserror::Error;

/// Errors raised by the core numerical machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("shift {shift:?} is not an integer number of grid cells (h = {h})")]
    NonIntegralShift { shift: Vec<i64>, h: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown formula tag `{0}`")]
    UnknownFormula(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("nehari projection failed: {0}")]
    Projection(#[from] ProjectionError),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Failure modes of the fiber root solve.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("nonlocal term vanishes (D = {0:e}); no point of the fiber lies on the manifold")]
    DegenerateNonlocal(f64),

    #[error("field is zero")]
    ZeroField,

    #[error("could not bracket the fiber root (last t = {t:e}, g = {g:e})")]
    NoBracket { t: f64, g: f64 },

    #[error("non-finite fiber data (Q = {q}, D = {d}, G = {g})")]
    NonFinite { q: f64, d: f64, g: f64 },
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
