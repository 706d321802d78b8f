//! Versioned JSON model file written by `fit` and read by `predict`/`wtp`.

use std::path::Path;

use mxlogit::{Fit, Schema};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact {
    pub artifact_version: u32,
    /// How the estimation data was read; reused for new data.
    pub schema: Schema,
    pub fit: Fit,
}

impl Artifact {
    pub fn new(schema: Schema, fit: Fit) -> Self {
        Self {
            artifact_version: ARTIFACT_VERSION,
            schema,
            fit,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Failure(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read model {}: {e}", path.display())))?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{} is not JSON: {e}", path.display())))?;
        match raw.get("artifact_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(ARTIFACT_VERSION) => {}
            Some(v) => {
                return Err(CliError::Usage(format!(
                    "{} has artifact_version {v}; this build reads version {ARTIFACT_VERSION}",
                    path.display()
                )))
            }
            None => return Err(CliError::Usage(format!("{} is not a model file", path.display()))),
        }
        serde_json::from_value(raw).map_err(|e| CliError::Usage(format!("bad model file {}: {e}", path.display())))
    }
}
