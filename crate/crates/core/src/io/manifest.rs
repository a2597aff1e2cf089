use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::container::write_atomic;
use super::IoError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl Artifact {
    pub fn of(dir: &Path, name: &str) -> Result<Self, IoError> {
        let bytes = std::fs::read(dir.join(name))?;
        Ok(Self { path: name.to_string(), bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(&bytes)) })
    }
}

/// Record written next to the artifacts of one command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    /// Hash of the settings this command's main artifact depends on.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub stage_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<Artifact>,
    /// Command-specific counts and scores.
    #[serde(default)]
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, config_hash: String) -> Self {
        Self {
            command: command.to_string(),
            config_hash,
            stage_hash: String::new(),
            seeds: BTreeMap::new(),
            artifacts: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn add(&mut self, dir: &Path, name: &str) -> Result<(), IoError> {
        self.artifacts.push(Artifact::of(dir, name)?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, IoError> {
        let path = dir.join(Self::file_name(&self.command));
        let mut text = serde_json::to_string_pretty(self).map_err(|e| IoError::Schema(e.to_string()))?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        serde_json::from_slice(&std::fs::read(path)?).map_err(|e| IoError::Schema(e.to_string()))
    }

    /// Names of artifacts whose current contents differ from the record.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| Artifact::of(dir, &a.path).map_or(true, |now| now != **a))
            .map(|a| a.path.clone())
            .collect()
    }
}
