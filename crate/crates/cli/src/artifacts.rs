//! Output directory with atomic writes and a hash manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub program: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub threads: usize,
    pub config: &'a RunConfig,
    /// The config as a loadable file; non-finite values survive here only.
    pub resolved_config: String,
    pub artifacts: &'a [ArtifactRecord],
}

pub struct Artifacts {
    root: PathBuf,
    records: Vec<ArtifactRecord>,
}

/// Writes `bytes` to a temporary file next to `path` and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl Artifacts {
    pub fn create(root: &Path) -> Result<Artifacts, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(Artifacts { root: root.to_path_buf(), records: vec![] })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.root.join(rel), bytes)?;
        self.records.push(ArtifactRecord {
            path: rel.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(rel, &text)
    }

    /// One header row, then one row per record.
    pub fn write_csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        self.write(rel, &bytes)
    }

    /// Writes `manifest.json`, listing every artifact written so far.
    pub fn finish(self, command: &str, config: &RunConfig, threads: usize) -> Result<Vec<ArtifactRecord>, CliError> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            program: "thermomag",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.seed,
            threads,
            config,
            resolved_config: config.to_text()?,
            artifacts: &self.records,
        };
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        write_atomic(&self.root.join("manifest.json"), &text)?;
        Ok(self.records)
    }
}
