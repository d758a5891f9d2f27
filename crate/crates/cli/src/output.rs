//! Run directories: CSV/JSON writers and the manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// `sha256("blob <len>\0" || content)`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a ExperimentConfig,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
}

/// Output directory bound to one command invocation.
pub struct RunDir {
    root: PathBuf,
    outputs: Vec<String>,
    inputs: Vec<InputRecord>,
}

impl RunDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
            inputs: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn record_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: content_hash(&bytes),
        });
        Ok(())
    }

    fn target(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.root.join(name)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.target(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(())
    }

    /// Writes a CSV with `header` and stringly rows.
    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.target(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.target(name);
        let mut f = fs::File::create(path)?;
        f.write_all(bytes)?;
        Ok(())
    }

    pub fn finish(mut self, command: &str, config: &ExperimentConfig) -> CliResult<PathBuf> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            inputs: std::mem::take(&mut self.inputs),
            outputs: self.outputs.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(self.root)
    }
}

/// Plain decimal formatting used in every CSV.
pub fn num(v: f64) -> String {
    format!("{v}")
}
