//! Run manifests: enough to replay a run and check its artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(Error::io(path))?;
        Ok(FileDigest { path: path.to_path_buf(), sha256: sha256_hex(&bytes) })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective arguments after merging the config file; replaying them
    /// reproduces the run.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Named wall-clock phases in seconds.
    pub timings: BTreeMap<String, f64>,
    pub exit_code: u8,
}

/// Collects inputs, outputs and phase timings while a command runs.
pub struct Recorder {
    manifest: Manifest,
    started: Instant,
}

impl Recorder {
    pub fn new(command: &str, args: Vec<String>, seed: Option<u64>) -> Self {
        Recorder {
            manifest: Manifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                args,
                seed,
                inputs: Vec::new(),
                outputs: Vec::new(),
                timings: BTreeMap::new(),
                exit_code: 0,
            },
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    /// Writes `contents` into `dir/name` and records its digest.
    pub fn output(&mut self, dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(Error::io(&path))?;
        self.manifest.outputs.push(FileDigest { path: PathBuf::from(name), sha256: sha256_hex(contents.as_bytes()) });
        Ok(path)
    }

    /// Times `f` under `phase`.
    pub fn phase<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.manifest.timings.entry(phase.to_string()).or_insert(0.0) += t.elapsed().as_secs_f64();
        out
    }

    pub fn finish(mut self, dir: &Path, exit_code: u8) -> Result<Manifest> {
        self.manifest.timings.insert("total".into(), self.started.elapsed().as_secs_f64());
        self.manifest.exit_code = exit_code;
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(Error::io(&path))?;
        Ok(self.manifest)
    }
}
