use thiserror::Error;

/// Errors raised by the power models, fitting routines and file layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown operation `{0}` (not in the platform op table)")]
    UnknownOperation(String),

    #[error("core count {cores} out of range 0..={max}")]
    CoreRange { cores: u32, max: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error(
        "fit did not converge after {iterations} iterations (best residual rms {best_rms:.6} mW)"
    )]
    NoConvergence {
        iterations: usize,
        best_rms: f64,
        best: crate::power::IntensityParams,
    },

    #[error("metadata error: {0}")]
    Metadata(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI. Each error class maps to a distinct
    /// code; 1 is a failed validation and 2 a command-line usage error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 3,
            Error::Fit(_) | Error::NoConvergence { .. } => 4,
            Error::Domain(_) | Error::Metadata(_) | Error::Config(_) => 5,
            Error::UnknownOperation(_) | Error::CoreRange { .. } => 6,
            Error::Io { .. } => 7,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
