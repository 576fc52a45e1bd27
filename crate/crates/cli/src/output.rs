use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CAUSALITY_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "causality-out";

pub struct OutputDir {
    dir: PathBuf,
    json: bool,
    csv: bool,
}

impl OutputDir {
    pub fn create(dir: PathBuf, json: bool, csv: bool) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir, json, csv })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Written to a temporary file in the same directory, then renamed.
    fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.dir.join(name);
        let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", target.display()));
        let mut tmp = NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        Ok(target)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<Option<PathBuf>, CliError> {
        if !self.json {
            return Ok(None);
        }
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write_atomic(name, text.as_bytes()).map(Some)
    }

    pub fn csv<F>(&self, name: &str, write: F) -> Result<Option<PathBuf>, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> causality_core::Result<()>,
    {
        if !self.csv {
            return Ok(None);
        }
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.write_atomic(name, &buf).map(Some)
    }
}
