//! Run directories and line-delimited output.
//!
//! Layout under the output root (`--out`, else `$SORTLET_OUT`, else
//! `run`):
//!
//! ```text
//! {root}/{config-hash}/config.json          resolved config
//! {root}/{config-hash}/metrics.ndjson       one record per iteration
//! {root}/{config-hash}/checkpoints/step-00001000.json
//! {root}/{config-hash}/report-{name}.txt    one JSON record per line
//! ```
//!
//! Metrics and reports are only ever appended to.
//!
//! Metrics fields: `iteration`, `energy`, `stderr`, `variance`,
//! `acceptance`, `step_size`, `grad_norm` and `elapsed_s`. Only
//! `elapsed_s` depends on the machine.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sortlet_core::optimizer::IterationRecord;

use crate::config::RunConfig;
use crate::CliError;

pub const OUT_ENV: &str = "SORTLET_OUT";

pub fn output_root(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("run")),
    }
}

#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// Create `{root}/{hash}` and record the resolved config there.
    pub fn create(root: &Path, config: &RunConfig) -> Result<Self, CliError> {
        let path = root.join(config.hash());
        fs::create_dir_all(path.join("checkpoints")).map_err(|e| CliError::io(&path, e))?;
        let cfg_path = path.join("config.json");
        let text = serde_json::to_string_pretty(config)?;
        fs::write(&cfg_path, text).map_err(|e| CliError::io(&cfg_path, e))?;
        Ok(Self { path })
    }

    pub fn metrics(&self) -> PathBuf {
        self.path.join("metrics.ndjson")
    }

    pub fn checkpoints(&self) -> PathBuf {
        self.path.join("checkpoints")
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.path.join(format!("report-{name}.txt"))
    }
}

/// Appends serializable records as single JSON lines.
#[derive(Debug)]
pub struct LineWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl LineWriter {
    pub fn append(path: &Path) -> Result<Self, CliError> {
        let f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(f) })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<(), CliError> {
        let line = serde_json::to_string(record)?;
        writeln!(self.out, "{line}").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsLine {
    #[serde(flatten)]
    pub record: IterationRecord,
    pub elapsed_s: f64,
}
