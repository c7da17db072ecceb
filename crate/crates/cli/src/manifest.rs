use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_json};

pub const SCHEMA_VERSION: u32 = 1;

pub fn artifact_version() -> String {
    format!("l0cca-cli {}", env!("CARGO_PKG_VERSION"))
}

/// Resolved configuration of one run, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C) -> CliResult<Self> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            artifact_version: artifact_version(),
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config).map_err(l0cca::Error::from)?,
        })
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join("manifest.json"), self)
    }

    /// Loads a manifest and decodes its config for `command`.
    pub fn load_config<C: DeserializeOwned>(path: &Path, command: &str) -> CliResult<C> {
        let m: Manifest = read_json(path)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(CliError::usage(format!(
                "{}: schema version {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                m.schema_version
            )));
        }
        if m.command != command {
            return Err(CliError::usage(format!(
                "{}: manifest is for `{}`, not `{command}`",
                path.display(),
                m.command
            )));
        }
        serde_json::from_value(m.config).map_err(|e| CliError::data(path, format!("config: {e}")))
    }
}
