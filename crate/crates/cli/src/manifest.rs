//! Provenance record written next to every output.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use caresim::config::LoadedConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    /// SHA-256 of the config file bytes.
    pub config_hash: Option<String>,
    /// SHA-256 of every input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    pub base_seed: Option<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn start(command: &'static str) -> Self {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_hash: None,
            inputs: BTreeMap::new(),
            base_seed: None,
            started_unix: now(),
            finished_unix: 0,
        }
    }

    pub fn hash_input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn record_inputs(&mut self, config_path: &Path, cfg: &LoadedConfig) -> anyhow::Result<()> {
        self.config_hash = Some(sha256_file(config_path)?);
        self.base_seed = Some(cfg.experiment.base_seed);
        for p in cfg.input_files() {
            self.hash_input(&p)?;
        }
        Ok(())
    }

    pub fn finish(mut self, path: &Path) -> anyhow::Result<()> {
        self.finished_unix = now();
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
