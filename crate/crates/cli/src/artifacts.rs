//! Manifests and small file helpers shared by the commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use wavecip::container::write_atomic;

use crate::config::{hex, Scenario, ScenarioConfig};
use crate::CliError;

pub const TOOL: &str = "wavecip";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to reproduce the files of one output directory. Carries
/// no timestamps or absolute paths so reruns are byte-identical.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub run_id: &'a str,
    pub config_hash: &'a str,
    pub scenario: &'a ScenarioConfig,
    pub parameters: serde_json::Value,
    /// sha256 of every file written next to the manifest.
    pub files: BTreeMap<String, String>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, scenario: &'a Scenario, parameters: serde_json::Value) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            run_id: &scenario.run_id,
            config_hash: &scenario.config_hash,
            scenario: &scenario.config,
            parameters,
            files: BTreeMap::new(),
        }
    }

    /// Writes `bytes` into `dir/name` and records its checksum.
    pub fn add_file(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        write_json(&dir.join("manifest.json"), self)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Solver(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

/// Directory name for one frequency, e.g. `eta_+6.283185_+0.000000`.
pub fn eta_tag(eta: [f64; 2]) -> String {
    // Avoid "-0.000000" so η and its mirror differ only where they should.
    let clean = |v: f64| if v.abs() < 5e-7 { 0.0 } else { v };
    format!("eta_{:+.6}_{:+.6}", clean(eta[0]), clean(eta[1]))
}
