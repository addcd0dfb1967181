//! JSON run manifest written next to every set of results.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::output::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub wall_s: f64,
    pub cpu_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved configuration, including defaults and command-line overrides.
    pub config: SimulationConfig,
    pub dim: usize,
    pub n_nuclei: usize,
    pub master_seed: u64,
    pub timings: Timings,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
}

impl Manifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        command: &str,
        config: SimulationConfig,
        dim: usize,
        n_nuclei: usize,
        timings: Timings,
        outputs: Vec<String>,
        summary: serde_json::Value,
        warnings: Vec<String>,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            master_seed: config.run.master_seed,
            config,
            dim,
            n_nuclei,
            timings,
            outputs,
            summary,
            warnings,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Other(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
    }
}
