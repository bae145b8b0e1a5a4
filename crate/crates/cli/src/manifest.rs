//! Provenance record written next to every command's outputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const TOOL: &str = "softsep";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// First 16 hex digits of the SHA-256 of the resolved config as JSON.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seeds: Vec<u64>) -> CliResult<Self> {
        let config = serde_json::to_value(config).map_err(softsep::Error::from)?;
        Ok(Manifest {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: config_hash(&config),
            seeds,
            config,
            outputs: BTreeMap::new(),
        })
    }

    pub fn output(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).expect("plain data serializes");
        self.outputs.insert(key.to_string(), v);
        self
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let body = serde_json::to_string_pretty(self).map_err(softsep::Error::from)? + "\n";
        softsep::io::write_text(&dir.join(MANIFEST_FILE), &body)?;
        Ok(())
    }
}

/// serde_json orders object keys, so equal configs hash equally.
pub fn config_hash(config: &serde_json::Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    hex::encode(&digest[..8])
}
