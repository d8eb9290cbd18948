use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, CliResult};

/// Record of one CLI run: what was asked for and what was written.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: PathBuf,
    pub config: Config,
    pub root_seed: u64,
    pub threads: usize,
    pub tool_version: &'static str,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<PathBuf>,
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

impl RunManifest {
    pub fn start(command: &str, config_path: &Path, config: &Config, root_seed: u64, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            config_path: config_path.to_path_buf(),
            config: config.clone(),
            root_seed,
            threads,
            tool_version: env!("CARGO_PKG_VERSION"),
            started_unix_ms: unix_ms(),
            finished_unix_ms: 0,
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix_ms = unix_ms();
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
