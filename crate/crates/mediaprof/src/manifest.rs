//! Per-stage manifests: what went in, what came out, and under which
//! configuration. A stage is fresh when its manifest matches the current
//! tool version, configuration hash and input contents, and every recorded
//! output still exists.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{read_json, write_json};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn sha256_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub config_hash: String,
    /// Module seeds derived from the master seed.
    pub seeds: BTreeMap<String, u64>,
    /// Content hash per input file.
    pub inputs: BTreeMap<String, String>,
    /// Content hash per output file.
    pub outputs: BTreeMap<String, String>,
}

/// Files are keyed relative to `root` when they live below it.
pub fn artifact_key(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

pub fn hash_files(root: &Path, files: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    files
        .iter()
        .map(|p| Ok((artifact_key(root, p), sha256_file(p)?)))
        .collect()
}

impl Manifest {
    pub fn read(path: &Path) -> Option<Manifest> {
        read_json(path).ok()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Why the stage must run, or `None` when it is fresh.
    pub fn staleness(
        &self,
        root: &Path,
        config_hash: &str,
        inputs: &[PathBuf],
    ) -> Option<String> {
        if self.tool_version != TOOL_VERSION {
            return Some(format!("tool version {} != {TOOL_VERSION}", self.tool_version));
        }
        if self.config_hash != config_hash {
            return Some("configuration changed".into());
        }
        let keys: Vec<String> = inputs.iter().map(|p| artifact_key(root, p)).collect();
        if keys.len() != self.inputs.len() || keys.iter().any(|k| !self.inputs.contains_key(k)) {
            return Some("input set changed".into());
        }
        for (p, k) in inputs.iter().zip(&keys) {
            match sha256_file(p) {
                Ok(h) if h == self.inputs[k] => {}
                Ok(_) => return Some(format!("input {k} changed")),
                Err(_) => return Some(format!("input {k} unreadable")),
            }
        }
        if let Some(missing) = self.outputs.keys().find(|k| !root.join(k).is_file()) {
            return Some(format!("output {missing} missing"));
        }
        None
    }
}
