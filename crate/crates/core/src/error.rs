use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violates its documented range or a cross-field invariant.
    #[error("invalid parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("argument error: {0}")]
    Argument(String),

    /// Parent links or mutation records do not describe a consistent lineage.
    #[error("lineage integrity error: {0}")]
    Integrity(String),

    /// A state the validated parameters should make unreachable.
    #[error("internal logic error: {0}")]
    Logic(String),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("run failed at r={r}, rho_A={rho_a}, replicate={replicate}: {source}")]
    Run {
        r: f64,
        rho_a: f64,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failure while running.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Invalid { .. } | Error::Argument(_) | Error::Config { .. } => true,
            Error::Run { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
