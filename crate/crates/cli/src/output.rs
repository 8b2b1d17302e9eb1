//! Writes run artifacts into the output directory and records them in a
//! `run.json` manifest alongside the seed and config hash.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Loaded;
use crate::error::CliError;

pub const MANIFEST: &str = "run.json";

#[derive(Serialize)]
struct ArtifactEntry {
    file: String,
    sha256: String,
}

pub struct RunWriter {
    dir: PathBuf,
    command: String,
    seed: u64,
    config_hash: String,
    effective: Value,
    artifacts: Vec<ArtifactEntry>,
}

impl RunWriter {
    pub fn new<P>(run: &Loaded<P>) -> Result<Self, CliError> {
        std::fs::create_dir_all(&run.out)
            .map_err(|e| CliError::validation(format!("out {}: {e}", run.out.display())))?;
        Ok(Self {
            dir: run.out.clone(),
            command: run.command.clone(),
            seed: run.seed,
            config_hash: run.config_hash.clone(),
            effective: run.effective.clone(),
            artifacts: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        self.artifacts.push(ArtifactEntry {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Writes with a core serializer into memory first so a failure leaves no
    /// partial file behind.
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> ovnet_core::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::runtime(format!("{name}: {e}")))?;
        self.write_bytes(name, &buf)
    }

    /// A JSON report object carrying `seed` and `config_hash` next to the
    /// fields of `body`.
    pub fn write_report<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        let value = match serde_json::to_value(body)
            .map_err(|e| CliError::runtime(format!("{name}: {e}")))?
        {
            Value::Object(mut map) => {
                map.insert("seed".into(), Value::from(self.seed));
                map.insert("config_hash".into(), Value::from(self.config_hash.clone()));
                Value::Object(map)
            }
            other => json!({ "seed": self.seed, "config_hash": self.config_hash, "report": other }),
        };
        let mut text = serde_json::to_vec_pretty(&value)
            .map_err(|e| CliError::runtime(format!("{name}: {e}")))?;
        text.push(b'\n');
        self.write_bytes(name, &text)
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        let manifest = json!({
            "command": self.command,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "config": self.effective,
            "artifacts": self.artifacts,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        text.push(b'\n');
        std::fs::write(&path, text)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        Ok(self.dir)
    }
}
