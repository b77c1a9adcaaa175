use thiserror::Error;

/// Errors raised anywhere in the packing pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid instance: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Every state of a message or field is forbidden.
    #[error("contradiction: {0}")]
    Contradiction(String),

    #[error("kernel capacity exceeded: {0}")]
    KernelCapacity(String),

    #[error("unsupported formalism: {0}")]
    UnsupportedFormalism(String),

    #[error("infeasible matching: {0}")]
    InfeasibleMatching(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("oracle capacity exceeded: {0}")]
    OracleCapacity(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
