//! Runs spin-bath experiments described by a JSON config and writes their
//! data series into a run directory.
//!
//! Every run directory holds `manifest.json`, written before any data with
//! `"status": "running"` and rewritten at the end with the artifact hashes.
//! Data files depend only on the config, never on the thread count.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{parse, validate, ExperimentConfig, ExperimentKind, Violation};
pub use output::{Manifest, RunDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("invalid config:\n{}", list(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Domain(#[from] spinbath_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn list(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Invalid(_) => 2,
            Self::Domain(_) => 3,
            Self::Io { .. } => 4,
        }
    }
}

/// Validates `config` and runs it into `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<Manifest, CliError> {
    let violations = validate(config);
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }
    let mut dir = RunDir::create(out, config)?;
    match experiments::run_into(config, &mut dir) {
        Ok(()) => dir.finish(),
        Err(e) => {
            // Leave a failed manifest behind; the original error wins.
            let _ = dir.fail(&e);
            Err(e)
        }
    }
}
