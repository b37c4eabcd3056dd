//! File formats, thread pool and command implementations for the
//! `sortlet` tool. The numerics live in `sortlet-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod exec;
pub mod format;
pub mod output;

use std::path::{Path, PathBuf};

use sortlet_core::optimizer::TrainError;
use sortlet_core::probes::ProbeError;

pub use config::{load_system, ConfigError, Overrides, RunConfig};
pub use exec::RayonExec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Mismatch(String),
    #[error("{0}")]
    Usage(String),
    #[error("training stopped: {source}; last good state saved to {}", checkpoint.display())]
    Train { source: TrainError, checkpoint: PathBuf },
    #[error(transparent)]
    Setup(TrainError),
    #[error("probe: {0}")]
    Probe(#[from] ProbeError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 2 for bad input, 1 for everything that failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
