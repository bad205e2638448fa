use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error categories used across the crate.
///
/// `Argument` covers bad call-level inputs (mismatched lengths, nonpositive
/// values), `Config` covers invalid run configuration (step sizes that do not
/// divide the subdomain, unsupported grid sizes), `Numeric` covers failures
/// detected while computing (non-convergence, loss of realness) and carries
/// enough context to locate the failing block/subdomain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric failure in {context}: {message}")]
    Numeric { context: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn numeric(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Exit-code category used by the command line harness: configuration
    /// and argument errors map to 2, numeric failures to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) => 2,
            Error::Numeric { .. } | Error::InsufficientData(_) => 3,
            Error::Io(_) => 4,
        }
    }
}
