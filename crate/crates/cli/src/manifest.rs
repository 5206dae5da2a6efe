use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything needed to reproduce a run and check its output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub elapsed: f64,
    /// SHA-256 of the bytes written to standard output.
    pub output_digest: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Vec<String>, seed: Option<u64>, elapsed: f64, output: &[u8]) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            elapsed,
            output_digest: hex::encode(Sha256::digest(output)),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n")
    }
}
