use std::path::PathBuf;

/// Crate-wide error type. The CLI maps variants to process exit codes, so
/// library code should pick the variant that matches the failure class rather
/// than defaulting to `Invalid`.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input not found: {}", path.display())]
    MissingInput { path: PathBuf },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("unknown {kind} id: {id}")]
    UnknownId { kind: &'static str, id: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite gradient while training pair ({target}, {context})")]
    NonFiniteGradient { target: String, context: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this failure class. 0/1 are reserved for
    /// success and unclassified errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingInput { .. } | Error::Io { .. } => 2,
            Error::Parse { .. } => 3,
            Error::Config(_) | Error::Invalid(_) => 4,
            Error::Coverage(_) => 5,
            Error::Structure(_) => 6,
            Error::UnknownId { .. } | Error::NonFiniteGradient { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
