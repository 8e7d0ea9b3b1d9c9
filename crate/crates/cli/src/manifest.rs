use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use scg_core::io::{sha256_file, write_json};
use serde::Serialize;

use crate::UsageError;

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileEntry {
    fn of(path: &Path) -> Result<Self> {
        Ok(FileEntry {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Option<FileEntry>,
    pub seed: Option<u64>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub duration_s: f64,
}

/// Collects a command's files, then writes the manifest.
pub struct Run {
    command: &'static str,
    started: Instant,
    config: Option<PathBuf>,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    manifest: PathBuf,
}

impl Run {
    /// Fails if any planned output (or the manifest) exists and `force` is off.
    pub fn start(command: &'static str, outputs: &[PathBuf], manifest: PathBuf, force: bool) -> Result<Self> {
        if !force {
            if let Some(p) = outputs.iter().chain([&manifest]).find(|p| p.exists()) {
                return Err(UsageError(format!("{} exists; pass --force to overwrite", p.display())).into());
            }
        }
        for p in outputs.iter().chain([&manifest]) {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
        }
        Ok(Run {
            command,
            started: Instant::now(),
            config: None,
            seed: None,
            inputs: Vec::new(),
            outputs: outputs.to_vec(),
            manifest,
        })
    }

    pub fn config(&mut self, path: &Path) {
        self.config = Some(path.to_path_buf());
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn finish(self) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            args: std::env::args().skip(1).collect(),
            config: self.config.as_deref().map(FileEntry::of).transpose()?,
            seed: self.seed,
            inputs: self.inputs.iter().map(|p| FileEntry::of(p)).collect::<Result<_>>()?,
            outputs: self.outputs.iter().map(|p| FileEntry::of(p)).collect::<Result<_>>()?,
            duration_s: self.started.elapsed().as_secs_f64(),
        };
        write_json(&self.manifest, &manifest)?;
        Ok(())
    }
}
