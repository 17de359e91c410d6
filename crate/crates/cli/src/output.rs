//! Run directory and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Wall-clock seconds since the Unix epoch. The only field that differs
/// between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub started: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
    pub timestamp: Timestamp,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Output directory of a single run.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    manifest: Manifest,
}

impl RunDir {
    /// Creates the directory and writes the `running` manifest.
    pub fn create(root: &Path, config: &ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let dir = Self {
            root: root.to_path_buf(),
            manifest: Manifest {
                tool: "spinbath".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                experiment: config.experiment.name().into(),
                status: Status::Running,
                error: None,
                config: config.clone(),
                artifacts: Vec::new(),
                timestamp: Timestamp {
                    started: now(),
                    finished: None,
                },
            },
        };
        dir.write_manifest()?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let path = self.root.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(path, e))
    }

    /// Writes `bytes` to `file` and records its hash.
    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(file);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest.artifacts.push(Artifact {
            file: file.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(
        &mut self,
        file: &str,
        value: &T,
    ) -> Result<(), CliError> {
        let mut text = serde_json::to_vec_pretty(value).expect("report serializes");
        text.push(b'\n');
        self.write(file, &text)
    }

    /// Renders into memory with `render`, then writes.
    pub fn write_with<F>(&mut self, file: &str, render: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf).map_err(|e| CliError::io(self.root.join(file), e))?;
        self.write(file, &buf)
    }

    pub fn finish(mut self) -> Result<Manifest, CliError> {
        self.manifest.status = Status::Complete;
        self.manifest.timestamp.finished = Some(now());
        self.write_manifest()?;
        Ok(self.manifest)
    }

    pub fn fail(mut self, err: &CliError) -> Result<(), CliError> {
        self.manifest.status = Status::Failed;
        self.manifest.error = Some(err.to_string());
        self.manifest.timestamp.finished = Some(now());
        self.write_manifest()
    }
}
