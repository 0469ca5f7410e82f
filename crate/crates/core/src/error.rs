use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("{path}: no valid rows")]
    NoValidRows { path: PathBuf },

    /// A caller-supplied parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("reports were produced with different analysis parameters: {0}")]
    ConfigMismatch(String),

    /// Wraps an error with the pipeline stage (and sub-bin) where it happened.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::InvalidParameter(_) | Error::ConfigMismatch(_) | Error::Json(_) => 1,
            Error::Numerical(_) | Error::NonFinite | Error::ShapeMismatch(_) => 3,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::NoValidRows { .. }
            | Error::InsufficientData { .. }
            | Error::Domain(_) => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        assert_eq!(Error::InvalidParameter("x".into()).exit_code(), 1);
        assert_eq!(Error::MissingColumn("power".into()).exit_code(), 2);
        assert_eq!(Error::Numerical("diverged".into()).exit_code(), 3);
        let nested = Error::NonFinite.at("sub-bin t0 w1").at("turbine T01");
        assert_eq!(nested.exit_code(), 3);
        assert_eq!(
            nested.to_string(),
            "turbine T01: sub-bin t0 w1: non-finite value in input"
        );
    }
}
