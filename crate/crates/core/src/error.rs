use std::path::PathBuf;

use thiserror::Error;

use crate::estimation::ExitStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("degenerate covariate: {0}")]
    DegenerateCovariate(String),

    #[error("model specification error: {0}")]
    Spec(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("estimation failed: all {} runs failed ({})", .statuses.len(), format_statuses(.statuses))]
    Estimation { statuses: Vec<(usize, ExitStatus)> },

    #[error("inference error: {0}")]
    Inference(String),

    #[error("comparison error: {0}")]
    Comparison(String),
}

fn format_statuses(statuses: &[(usize, ExitStatus)]) -> String {
    statuses
        .iter()
        .map(|(run, status)| format!("run {run}: {status}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }

    pub(crate) fn inference(msg: impl Into<String>) -> Self {
        Error::Inference(msg.into())
    }

    /// True for errors caused by bad input (files, schemas, specs) rather than
    /// numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv(_)
                | Error::Schema(_)
                | Error::Validation(_)
                | Error::Type(_)
                | Error::DegenerateCovariate(_)
                | Error::Spec(_)
                | Error::Capability(_)
                | Error::Domain(_)
                | Error::Comparison(_)
        )
    }
}
