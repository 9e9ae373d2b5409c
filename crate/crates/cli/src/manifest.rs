//! Run manifests. Each command writes `manifest.json` next to its
//! artifacts: the command name, the effective config snapshot, the seeds
//! in play and SHA-256 hashes of every input and output file. Feeding a
//! manifest back through `--config` reruns the command identically.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub duration_secs: f64,
    #[serde(skip, default = "Instant::now")]
    started: Instant,
}

impl RunManifest {
    pub fn new(command: &str, config: Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_secs: 0.0,
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Finalize and write `manifest.json` into `dir`.
    pub fn write(mut self, dir: &Path) -> Result<PathBuf> {
        self.duration_secs = self.started.elapsed().as_secs_f64();
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self)
            .map_err(|e| CliError::runtime(format!("manifest serialization: {e}")))?;
        fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path)
        .map_err(|e| CliError::runtime(format!("cannot hash {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let read = file.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

/// Create the output directory (parents included) and return it.
pub fn ensure_out_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_and_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("a.bin");
        fs::write(&artifact, b"payload").unwrap();

        let mut m = RunManifest::new("gen", serde_json::json!({"count": 1}));
        m.seed(7);
        m.output(&artifact).unwrap();
        let path = m.write(dir.path()).unwrap();

        let loaded: RunManifest =
            serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(loaded.command, "gen");
        assert_eq!(loaded.seeds, vec![7]);
        assert_eq!(loaded.outputs.len(), 1);
        assert_eq!(loaded.outputs[0].sha256, sha256_file(&artifact).unwrap());
    }
}
