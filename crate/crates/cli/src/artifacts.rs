//! Output directory bookkeeping: atomic writes and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use chaoscorr::output::Table;

use crate::cache::write_atomic;
use crate::error::CliError;

/// Rows kept per plot file with `--emit-plot-data`.
const PLOT_ROWS: usize = 200;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub software_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub files: Vec<FileEntry>,
}

pub struct Artifacts {
    dir: PathBuf,
    emit_plot_data: bool,
    files: Vec<FileEntry>,
}

impl Artifacts {
    pub fn new(dir: &Path, emit_plot_data: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), emit_plot_data, files: Vec::new() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        self.write_bytes(name, table.render().as_bytes())?;
        if self.emit_plot_data && table.rows.len() > PLOT_ROWS {
            let step = table.rows.len().div_ceil(PLOT_ROWS);
            let plot = table.downsampled(step).meta("downsample_step", step);
            self.write_bytes(&format!("plot/{name}"), plot.render().as_bytes())?;
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `manifest.json` listing every file emitted so far.
    pub fn finish(self, command: &str, config_hash: &str, seed: u64, started_unix: u64) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
            seed,
            started_unix,
            finished_unix: unix_now(),
            files: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())?;
        Ok(manifest)
    }
}
