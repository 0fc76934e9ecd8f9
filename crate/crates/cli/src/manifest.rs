use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use condgan::data::LabeledDataset;
use condgan::kvconfig::KvConfig;
use condgan::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(FileRecord {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetRecord {
    pub name: String,
    pub source_sha256: String,
    pub scale: String,
    pub split_seed: u64,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
}

impl DatasetRecord {
    pub fn new(train: &LabeledDataset, valid: &LabeledDataset, test: &LabeledDataset, split_seed: u64) -> Self {
        DatasetRecord {
            name: train.meta().name.clone(),
            source_sha256: train.meta().source_checksum.clone(),
            scale: train.meta().scale.clone(),
            split_seed,
            n_train: train.len(),
            n_valid: valid.len(),
            n_test: test.len(),
        }
    }
}

/// Everything needed to repeat a run: the resolved settings (also written
/// as `config.txt`, usable with `--config`), inputs and outputs with their
/// digests, and timings.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub dataset: Option<DatasetRecord>,
    pub inputs: BTreeMap<String, FileRecord>,
    pub artifacts: BTreeMap<String, FileRecord>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: &KvConfig, seed: u64) -> Self {
        RunManifest {
            tool: "condgan",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().collect(),
            config: config.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            seed,
            dataset: None,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(name.to_string(), FileRecord::of(path)?);
        Ok(())
    }

    pub fn artifact(&mut self, name: &str, path: &Path) -> Result<(), CliError> {
        let record = FileRecord::of(path).map_err(|e| CliError::internal(e.to_string()))?;
        self.artifacts.insert(name.to_string(), record);
        Ok(())
    }

    /// Writes `config.txt` and `manifest.json` into `out`.
    pub fn write(&mut self, out: &Path, config: &KvConfig) -> Result<(), CliError> {
        let cfg_path = out.join("config.txt");
        write_file(&cfg_path, config.to_text().as_bytes())?;
        self.artifact("config", &cfg_path)?;
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_file(&out.join("manifest.json"), json.as_bytes())
    }
}

/// Output failures are internal errors, unlike unreadable inputs.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", path.display())))
}
