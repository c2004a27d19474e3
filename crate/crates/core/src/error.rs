use std::path::PathBuf;

/// Errors produced by the simulator library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-finite values,
    /// negative durations, coincident positions and the like).
    #[error("domain error: {0}")]
    Domain(String),

    /// A Jacobian or bearing is undefined because the observer and the
    /// target coincide.
    #[error("singular geometry: range is zero")]
    SingularGeometry,

    /// A covariance supplied to the filter is not symmetric positive
    /// semi-definite.
    #[error("{what} is not symmetric positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd {
        what: &'static str,
        min_eigenvalue: f64,
    },

    /// The innovation covariance became singular or too ill-conditioned to
    /// invert.
    #[error("filter divergence at step {step}: {reason}")]
    FilterDivergence { step: usize, reason: String },

    #[error("invalid maneuver schedule: {0}")]
    InvalidSchedule(String),

    /// Config validation failure, naming the offending field.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("malformed config: {0}")]
    ConfigSyntax(String),

    #[error("malformed trace csv: {0}")]
    TraceFormat(String),

    /// An experiment ran but its outcome violates a hard consistency check.
    #[error("experiment `{experiment}` failed: {reason}")]
    ExperimentFailed { experiment: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than by a run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::ConfigSyntax(_) | Error::InvalidSchedule(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
