use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::units::{DimensionlessParams, Normalization, PhysicalInput};

/// Record written next to every run's outputs. Contains nothing that varies
/// between identical runs (no timestamps, host names or output paths).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub subcommand: String,
    /// SHA-256 of the effective configuration (after command-line
    /// overrides, output directory excluded) in canonical JSON.
    pub config_sha256: String,
    pub seed: u64,
    pub parameters: DimensionlessParams,
    pub physical: Option<PhysicalInput>,
    pub normalization: Normalization,
    pub units: String,
    /// Output file name to SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(config: &ScenarioConfig) -> Result<String> {
    let mut effective = config.clone();
    effective.output = None;
    let canonical = serde_json::to_vec(&effective).map_err(|e| Error::Config(e.to_string()))?;
    Ok(sha256_hex(&canonical))
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        config: &ScenarioConfig,
        seed: u64,
        parameters: DimensionlessParams,
        normalization: Normalization,
    ) -> Result<Self> {
        Ok(Self {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config_sha256: config_hash(config)?,
            seed,
            parameters,
            physical: config.physical,
            normalization,
            units: "frequencies in units of omega0; rates in units of gamma0; probabilities per steradian \
                    with the normalized prefactor kappa = 3 gamma_tilde / (16 pi^2)"
                .to_string(),
            outputs: BTreeMap::new(),
            warnings: Vec::new(),
        })
    }

    /// Writes `bytes` to `dir/name` and records its checksum.
    pub fn write_output(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(dir.join(name), bytes)?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(e.to_string()))?;
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}
