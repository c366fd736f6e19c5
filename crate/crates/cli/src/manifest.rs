//! Run manifests: every invocation records its resolved configuration,
//! artifact checksums and certified error budgets next to the data it
//! wrote, so a run can be reproduced and its outputs verified byte for
//! byte. Only the wall-clock field varies between identical runs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::CliError;

pub const DATA_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct ArtifactInfo {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Serialize, Default)]
pub struct ErrorBudget {
    /// Certified series truncation bound at the resolved order.
    pub series_err_bound: f64,
    /// Resolved series truncation order.
    pub series_order: usize,
    /// Discarded thermal weight of the Fock cutoff, when an oracle ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_deficit: Option<f64>,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub data_format: u32,
    pub command: String,
    pub command_line: Vec<String>,
    /// Fully resolved configuration of the run.
    pub config: serde_json::Value,
    pub artifacts: Vec<ArtifactInfo>,
    pub error_budget: ErrorBudget,
    /// Excluded from reproducibility comparisons.
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, budget: ErrorBudget) -> Self {
        RunManifest {
            tool: "jcmflow",
            version: env!("CARGO_PKG_VERSION"),
            data_format: DATA_FORMAT_VERSION,
            command: command.to_string(),
            command_line: std::env::args().collect(),
            config,
            artifacts: Vec::new(),
            error_budget: budget,
            wall_clock_seconds: 0.0,
        }
    }

    /// Hash a written artifact into the manifest.
    pub fn record_artifact(&mut self, path: &Path) -> Result<(), CliError> {
        let data = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&data);
        self.artifacts.push(ArtifactInfo {
            path: path.display().to_string(),
            sha256: hex::encode(hasher.finalize()),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    /// Write the manifest as `<output>.manifest.json`.
    pub fn write(mut self, output: &Path, wall_clock_seconds: f64) -> Result<PathBuf, CliError> {
        self.wall_clock_seconds = wall_clock_seconds;
        let path = manifest_path(output);
        let mut text = serde_json::to_string_pretty(&self)
            .map_err(|e| CliError::Io(format!("manifest serialization: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
