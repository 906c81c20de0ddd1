use std::path::PathBuf;

/// Errors produced while loading data, fitting forests, scoring and
/// evaluating.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}, column {column}: cannot parse {field:?} as a number")]
    Parse {
        line: usize,
        column: usize,
        field: String,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("input contains no records")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid time range: start {start} > end {end}")]
    InvalidRange { start: usize, end: usize },

    #[error("time index {t} outside 1..={d}")]
    InvalidIndex { t: usize, d: usize },

    #[error("non-finite sample value {0}")]
    InvalidValue(f64),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("point at time {t} has no similar time points; the forest was not fitted on this data")]
    OutOfSample { t: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("serialization failed: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI.
    ///
    /// 2: unreadable or malformed input, 3: bad configuration or shape,
    /// 4: I/O failure, 5: undefined metric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Malformed { .. } | Error::EmptyInput | Error::InvalidValue(_) => 2,
            Error::Config(_)
            | Error::InvalidRange { .. }
            | Error::InvalidIndex { .. }
            | Error::Shape { .. }
            | Error::OutOfSample { .. } => 3,
            Error::Io { .. } | Error::Serde(_) => 4,
            Error::UndefinedMetric(_) => 5,
        }
    }
}
