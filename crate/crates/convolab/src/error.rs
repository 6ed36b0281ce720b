use thiserror::Error;

/// Library-wide error type. The CLI maps these onto process exit codes:
/// configuration problems exit 64, violated numerical preconditions exit 65.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("representation error: {0}")]
    Representation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("equation solve failed: {0}")]
    Solve(String),

    #[error("aliasing above tolerance: {0}")]
    Aliasing(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::Unsupported(_) => 64,
            _ => 65,
        }
    }
}
