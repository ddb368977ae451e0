use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single field-level configuration problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub reason: String,
}

impl FieldError {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration, one entry per offending field.
    #[error("invalid configuration: {}", join(.0))]
    Config(Vec<FieldError>),

    /// A step size violates a stability bound of the explicit scheme.
    #[error("step size {dt} exceeds the stability bound {bound} ({condition})")]
    Stability {
        condition: &'static str,
        dt: f64,
        bound: f64,
    },

    /// The state left the finite numbers or drifted beyond tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    /// Malformed input data (CSV snapshots and the like).
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// An error raised inside a scenario, with the scenario named.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config(vec![FieldError::new(path, reason)])
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by the caller's input rather than the numerics.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Context { source, .. } => source.is_usage(),
            other => matches!(other, Error::Config(_) | Error::Parse { .. } | Error::Io { .. }),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Prefixes every field path of a configuration error with `prefix.`.
    pub fn under(self, prefix: &str) -> Self {
        match self {
            Error::Config(errors) => Error::Config(
                errors
                    .into_iter()
                    .map(|e| FieldError::new(format!("{prefix}.{}", e.path), e.reason))
                    .collect(),
            ),
            other => other,
        }
    }
}

fn join(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
