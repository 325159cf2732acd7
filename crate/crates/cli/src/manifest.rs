//! Run manifest: what ran, with which configuration, and which files it wrote.

use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{sha256_hex, OutputFile};
use crate::run::Preset;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub preset: Preset,
    pub config_sha256: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub output_dir: String,
    pub files: Vec<OutputFile>,
    pub config_snapshot: String,
}

impl RunManifest {
    pub fn new(
        preset: Preset,
        config: &ExperimentConfig,
        dir: &Path,
        started: DateTime<Utc>,
        files: Vec<OutputFile>,
    ) -> Self {
        Self {
            preset,
            config_sha256: sha256_hex(config.source.as_bytes()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            output_dir: dir.display().to_string(),
            files,
            config_snapshot: config.source.clone(),
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(dir.join(MANIFEST_FILE), bytes)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}
