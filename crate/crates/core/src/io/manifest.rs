use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::crc64_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    /// CRC-64/XZ of the file contents.
    pub crc64: String,
}

impl FileEntry {
    /// Checksums the file at `path`; `name` is what gets recorded.
    pub fn of(path: &Path, name: &str) -> Result<Self> {
        Ok(FileEntry {
            path: name.to_owned(),
            crc64: crc64_hex(&fs::read(path)?),
        })
    }
}

/// Record of one pipeline run. Contains no timestamps or host details, so
/// identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: Option<String>,
    pub seed: u64,
    pub chunk_size: usize,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub results: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config_hash: Option<String>, seed: u64) -> Self {
        Manifest {
            tool: "curvetomo".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash,
            seed,
            chunk_size: crate::par::DEFAULT_CHUNK,
            inputs: Vec::new(),
            outputs: Vec::new(),
            results: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
