use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Replay record written next to every result-producing command: the
/// command line, the configuration snapshot, the tool version, digests of
/// every input file and the list of outputs. Deleting the outputs and
/// replaying the manifest's command regenerates identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub command: Vec<String>,
    pub version: String,
    pub seed: u64,
    /// Free-form configuration snapshot (JSON value of whatever the command
    /// ran with).
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl ExperimentManifest {
    pub fn new(command: Vec<String>, seed: u64, config: serde_json::Value) -> ExperimentManifest {
        ExperimentManifest {
            command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::formats::write_json(path, self)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("digesting {}", path.display()))?;
    Ok(hex_digest(&bytes))
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Digest of every output file listed in a manifest, for whole-run
/// reproducibility checks.
pub fn digest_outputs(manifest: &ExperimentManifest) -> Result<Vec<InputDigest>> {
    manifest
        .outputs
        .iter()
        .map(|p| {
            let path = PathBuf::from(p);
            Ok(InputDigest {
                path: p.clone(),
                sha256: sha256_file(&path)?,
            })
        })
        .collect()
}
