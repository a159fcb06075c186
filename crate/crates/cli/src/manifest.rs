//! Run manifests: everything needed to reproduce a run bit-exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    /// Fully resolved flat configuration, sorted by key.
    pub config: BTreeMap<String, String>,
    /// Trial-stream seed actually used (`sim.rng_seed`).
    pub rng_seed: u64,
    pub threads: usize,
    /// Wall-clock duration; excluded from replay comparison.
    pub duration_seconds: f64,
    /// Output files written by the run, relative to the manifest directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join(MANIFEST_NAME);
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<RunManifest> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
