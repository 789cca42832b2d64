use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),

    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },

    #[error("invariant violation at {path}: {message}")]
    InvariantViolation { path: String, message: String },

    #[error("duplicate run at {0}")]
    DuplicateRun(String),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("missing absolute block at {0}")]
    MissingAbsolute(String),

    #[error("no samples in normalisation pool for {0}")]
    EmptyPool(String),

    #[error("ragged runs: {0}")]
    RaggedRuns(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("task lists differ: {0}")]
    TaskListMismatch(String),

    #[error("step grids differ across tasks: {}", .0.join(", "))]
    StepGridMismatch(Vec<String>),

    #[error("cannot plot curves of different kinds together ({0})")]
    MixedCurveKinds(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::SchemaViolation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvariantViolation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl Error {
    /// Re-roots a path-carrying error produced by a nested constructor under
    /// `prefix` (the constructor reports paths relative to `$`).
    pub(crate) fn rebase(self, prefix: &str) -> Self {
        let reroot = |path: String| match path.strip_prefix('$') {
            Some(rest) => format!("{prefix}{rest}"),
            None => path,
        };
        match self {
            Error::SchemaViolation { path, message } => Error::SchemaViolation {
                path: reroot(path),
                message,
            },
            Error::InvariantViolation { path, message } => Error::InvariantViolation {
                path: reroot(path),
                message,
            },
            other => other,
        }
    }
}
