use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Workspace configuration: one JSON document that pins every knob a full
/// pipeline run depends on. All downstream randomness derives from
/// `master_seed`, so a config plus a corpus replays bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceConfig {
    pub corpus_dir: PathBuf,
    /// Pass-sequence database JSON; the built-in database when absent.
    #[serde(default)]
    pub passdb: Option<PathBuf>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_seeds_per_sequence")]
    pub seeds_per_sequence: usize,
    #[serde(default = "default_sp_min")]
    pub sp_min: f64,
    #[serde(default = "default_sp_max")]
    pub sp_max: f64,
    #[serde(default = "default_trigger_cap")]
    pub trigger_cap: usize,
    pub out_dir: PathBuf,
}

fn default_k() -> usize {
    3
}

fn default_seeds_per_sequence() -> usize {
    4
}

fn default_sp_min() -> f64 {
    0.001
}

fn default_sp_max() -> f64 {
    0.05
}

fn default_trigger_cap() -> usize {
    200_000
}

impl WorkspaceConfig {
    pub fn load(path: &Path) -> Result<WorkspaceConfig> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
