//! JSON record of a CLI run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use super::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// The config file as parsed, plus its verbatim text.
    pub config: Value,
    pub config_text: String,
    pub duration_seconds: f64,
    pub warnings: Vec<String>,
    /// Every file written by the run, the manifest last.
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
    /// Set when the run finished but crossed a validity limit.
    pub breach: Option<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, config_text: &str) -> Result<Self, CliError> {
        let config: toml::Table = toml::from_str(config_text).map_err(|e| CliError::Config(e.to_string()))?;
        let config = serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            config_text: config_text.to_string(),
            duration_seconds: 0.0,
            warnings: Vec::new(),
            outputs: Vec::new(),
            summary: Value::Null,
            breach: None,
        })
    }

    /// Stamps the duration and writes the manifest to `path`.
    pub fn finish(&mut self, path: &Path, start: Instant) -> Result<(), CliError> {
        self.outputs.push(path.to_path_buf());
        self.duration_seconds = start.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}
