//! Run manifests: a JSON record of what produced the artifacts in an output
//! directory (tool version, subcommand, config echo, input hashes, extra
//! request parameters).
//!
//! Manifests deliberately carry no wall-clock timestamps so byte-identical
//! runs stay byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: toml::Value,
    params: &'a BTreeMap<String, String>,
    inputs: Vec<InputRecord>,
}

pub struct ManifestBuilder {
    subcommand: String,
    raw_config: String,
    params: BTreeMap<String, String>,
    inputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, raw_config: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            raw_config: raw_config.to_string(),
            params: BTreeMap::new(),
            inputs: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<String>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Registers a file, or every file under a directory, as an input.
    pub fn input(mut self, path: &Path) -> Self {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(path)
                .into_iter()
                .flatten()
                .flatten()
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            self.inputs.extend(entries);
        } else {
            self.inputs.push(path.to_path_buf());
        }
        self
    }

    pub fn write(self, out_dir: &Path) -> Result<(), CliError> {
        let config: toml::Value = toml::from_str(&self.raw_config)
            .map_err(|e| CliError::Config(format!("config echo failed: {e}")))?;
        let mut inputs = Vec::with_capacity(self.inputs.len());
        for path in &self.inputs {
            let bytes = fs::read(path)
                .map_err(|e| CliError::Io(format!("hashing {}: {e}", path.display())))?;
            let digest = Sha256::digest(&bytes);
            let sha256: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            inputs.push(InputRecord { path: path.display().to_string(), sha256 });
        }
        let manifest = Manifest {
            tool: "topcat",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: &self.subcommand,
            config,
            params: &self.params,
            inputs,
        };
        let rendered = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(out_dir.join("manifest.json"), rendered + "\n")
            .map_err(|e| CliError::Io(e.to_string()))?;
        Ok(())
    }
}
