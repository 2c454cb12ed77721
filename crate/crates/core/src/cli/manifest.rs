use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::fsutil::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config_digest: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if m.format_version != MANIFEST_FORMAT_VERSION {
            return Err(CliError::Input(format!("{}: unsupported format_version {}", path.display(), m.format_version)));
        }
        Ok(m)
    }

    /// Output entries whose on-disk digest no longer matches.
    pub fn stale_outputs(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|f| file_digest(&dir.join(&f.path)).ok().as_deref() != Some(f.sha256.as_str()))
            .map(|f| f.path.clone())
            .collect()
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Collects a command's outputs, writes each atomically and finishes with
/// the manifest.
pub struct OutDir {
    dir: PathBuf,
    command: String,
    seed: Option<u64>,
    config_digest: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    started: String,
}

impl OutDir {
    pub fn create(dir: &Path, command: &str, seed: Option<u64>, config: &serde_json::Value) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            seed,
            config_digest: sha256_hex(&serde_json::to_vec(config).expect("config serializes")),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: now(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = file_digest(path)?;
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))?;
        self.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config_digest: self.config_digest,
            inputs: self.inputs,
            outputs: self.outputs,
            started: self.started,
            finished: now(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        let path = self.dir.join(MANIFEST_FILE);
        write_atomic(&path, &bytes).map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}
