use choquard_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ExpError {
    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Config(_) => 2,
            ExpError::Core(CoreError::Config(_) | CoreError::UnknownFormula(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExpError>;
