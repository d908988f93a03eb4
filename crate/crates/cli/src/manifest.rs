//! Run manifests and atomic stage output.
//!
//! Every stage directory gets a `manifest.json` holding the tool version,
//! the subcommand, the fully resolved configuration, and a digest per input
//! file; rerunning with the same manifest reproduces the outputs byte for
//! byte. Output files are written through a temp-file-plus-rename writer
//! that removes everything it wrote if the stage fails.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// FNV-1a over the raw file bytes, hex-encoded.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("fnv1a64:{h:016x}")
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read input {}", path.display()))?;
    Ok(digest_bytes(&bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub inputs: Vec<InputRecord>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(subcommand: &str, config: &RunConfig, inputs: &[&Path]) -> Result<Self> {
        let labeled: Vec<(String, &Path)> = inputs
            .iter()
            .map(|p| (p.display().to_string(), *p))
            .collect();
        Manifest::with_labeled_inputs(subcommand, config, &labeled)
    }

    /// Like [`Manifest::new`] but with explicit display paths; used when
    /// inputs are derived artifacts whose location (unlike their content)
    /// is not part of the run's identity.
    pub fn with_labeled_inputs(
        subcommand: &str,
        config: &RunConfig,
        inputs: &[(String, &Path)],
    ) -> Result<Self> {
        let mut records = Vec::with_capacity(inputs.len());
        for (label, path) in inputs {
            records.push(InputRecord {
                path: label.clone(),
                digest: digest_file(path)?,
            });
        }
        Ok(Manifest {
            tool: "mainstreamlab".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed: config.seed,
            inputs: records,
            config: config.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        json
    }
}

/// Collects stage outputs and removes them all if the stage fails before
/// `commit`.
pub struct StageWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl StageWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(StageWriter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
        fs::rename(&tmp, &target)
            .with_context(|| format!("cannot move output into place at {}", target.display()))?;
        self.written.push(target.clone());
        Ok(target)
    }

    pub fn write_manifest(&mut self, manifest: &Manifest) -> Result<()> {
        self.write("manifest.json", &manifest.to_json())?;
        Ok(())
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for StageWriter {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = fs::remove_file(path);
            }
        }
    }
}
