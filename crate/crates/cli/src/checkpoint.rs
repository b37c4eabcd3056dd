//! Training checkpoints.
//!
//! A checkpoint is one JSON document holding the resolved config, its hash,
//! the parameter layout and values, the Adam moments and every walker's
//! position and RNG position. Floats are written with shortest round-trip
//! formatting, so reloading gives the exact bits and a resumed run
//! continues the original one bitwise.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sortlet_core::backbone::ParamStore;
use sortlet_core::optimizer::TrainerState;

use crate::config::RunConfig;
use crate::CliError;

pub const FORMAT: &str = "sortlet-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub config: RunConfig,
    pub params: ParamStore,
    pub trainer: TrainerState,
}

impl Checkpoint {
    pub fn new(config: &RunConfig, params: ParamStore, trainer: TrainerState) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            config_hash: config.hash(),
            config: config.clone(),
            params,
            trainer,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string(self)?;
        // write-then-rename so an interrupted save never leaves a torn file
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }

    /// Load and check internal consistency: format tag, version, that the
    /// stored config still hashes to the stored hash, and that the trainer
    /// parameters are the stored parameters.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.format != FORMAT || ck.version != VERSION {
            return Err(CliError::Mismatch(format!("{}: not a version {VERSION} checkpoint", path.display())));
        }
        if ck.config.hash() != ck.config_hash {
            return Err(CliError::Mismatch(format!("{}: stored config does not match its hash", path.display())));
        }
        if ck.params.values != ck.trainer.params {
            return Err(CliError::Mismatch(format!("{}: parameter blocks disagree", path.display())));
        }
        Ok(ck)
    }

    /// Refuse to pair this checkpoint with a config that hashes differently.
    pub fn check_config(&self, config: &RunConfig) -> Result<(), CliError> {
        let h = config.hash();
        if h != self.config_hash {
            return Err(CliError::Mismatch(format!(
                "checkpoint was written for config {} but this config hashes to {h}",
                self.config_hash
            )));
        }
        Ok(())
    }
}

pub fn file_name(iteration: u64) -> String {
    format!("step-{iteration:08}.json")
}

/// The checkpoint with the highest step number in `dir`, if any.
pub fn latest(dir: &Path) -> Result<Option<PathBuf>, CliError> {
    if !dir.exists() {
        return Ok(None);
    }
    let mut best: Option<(u64, PathBuf)> = None;
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let Some(step) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("step-"))
            .and_then(|n| n.strip_suffix(".json"))
            .and_then(|n| n.parse::<u64>().ok())
        else {
            continue;
        };
        if best.as_ref().map_or(true, |(b, _)| step > *b) {
            best = Some((step, path));
        }
    }
    Ok(best.map(|(_, p)| p))
}
