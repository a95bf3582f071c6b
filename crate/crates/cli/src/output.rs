//! CSV and JSON artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Shortest decimal that parses back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Other(e.into()))?;
    w.write_record(header).map_err(|e| CliError::Other(e.into()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Other(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.into()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// SHA-256 of the compact JSON form of the effective configuration.
pub fn config_hash(cfg: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(cfg).unwrap_or_default();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
    pub exclusion_counts: BTreeMap<String, u64>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl Meta {
    pub fn new(cfg: &impl Serialize, seed: u64) -> Self {
        Self {
            config_hash: config_hash(cfg),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            exclusion_counts: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }
}

/// Writes `config.json` (the effective configuration, rerunnable as is) and `meta.json`.
pub fn write_run_record(out: &Path, cfg: &impl Serialize, meta: &Meta) -> Result<(), CliError> {
    write_json(&out.join("config.json"), cfg)?;
    write_json(&out.join("meta.json"), meta)
}
