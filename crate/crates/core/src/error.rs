use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("config file not found: {}", .0.display())]
    ConfigMissing(PathBuf),

    #[error("malformed config: {0}")]
    ConfigSyntax(String),

    /// A config value violated an invariant; `field` is the dotted path.
    #[error("invalid config value for `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code: 2 missing config, 3 malformed, 4 invalid, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigMissing(_) => 2,
            Error::ConfigSyntax(_) => 3,
            Error::ConfigInvalid { .. } => 4,
            _ => 1,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Fails with a domain error unless `value` is finite.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be strictly positive, got {value}")))
    }
}

pub(crate) fn ensure_nonnegative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be nonnegative, got {value}")))
    }
}
