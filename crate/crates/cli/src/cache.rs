//! On-disk cache of HUM controls.
//!
//! An entry is `<key>.wcip` (the applied control as a trace container) plus
//! `<key>.json` (the certification record). The key hashes everything the
//! control depends on: grid, Γ, T, η, the cutoff β and the solver settings.
//! Both files are written through a temp file and a rename, so concurrent
//! writers of the same key leave one complete entry. A missing, unreadable or
//! inconsistent entry is solved again and replaced.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use wavecip::container::{container_trace, decode, encode, trace_container, write_atomic};
use wavecip::hum::{solve_control, ControlFunction};
use wavecip::wave::Quantity;
use wavecip::{ControlFunction64, FrequencySample64};

use crate::artifacts::{sha256_hex, write_json};
use crate::config::Scenario;
use crate::CliError;

const KEY_FORMAT: u32 = 1;

#[derive(Serialize)]
struct KeyMaterial<'a> {
    format: u32,
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    nt: usize,
    dt: f64,
    t_final: f64,
    sides: Vec<&'static str>,
    c0: f64,
    inner_half_width: [f64; 2],
    cutoff_margin: f64,
    eta: [f64; 2],
    cg_tol: f64,
    cg_max_iters: usize,
    epsilon: f64,
    filter: bool,
    taper_fraction: f64,
    payload: &'a str,
}

/// Certification record stored next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheManifest {
    pub key: String,
    pub eta: [f64; 2],
    pub residual_energy: f64,
    pub iterations: usize,
    pub epsilon: f64,
    pub regularization: f64,
    pub certified: bool,
    pub initial_energy: f64,
    pub residual_history: Vec<f64>,
    pub trace_sha256: String,
    pub created_unix_s: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Miss,
    /// The entry existed but failed a check; the reason is kept.
    Replaced(String),
}

#[derive(Debug, Clone)]
pub struct ControlCache {
    dir: PathBuf,
}

impl ControlCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn for_scenario(s: &Scenario) -> Self {
        Self::new(s.cache_dir())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(s: &Scenario, eta: &FrequencySample64) -> String {
        let g = &s.grid;
        let k = &s.config.coefficient;
        let h = &s.pipeline.hum;
        let material = KeyMaterial {
            format: KEY_FORMAT,
            lx: g.lx(),
            ly: g.ly(),
            nx: g.nx(),
            ny: g.ny(),
            nt: g.nt(),
            dt: g.dt(),
            t_final: g.t_final(),
            sides: s.partition.sides().iter().map(|d| d.name()).collect(),
            c0: k.c0,
            inner_half_width: k.inner_half_width,
            cutoff_margin: k.cutoff_margin,
            eta: eta.eta(),
            cg_tol: h.cg_tol,
            cg_max_iters: h.cg_max_iters,
            epsilon: h.epsilon,
            filter: h.filter,
            taper_fraction: h.taper_fraction,
            payload: &s.config.control.payload,
        };
        sha256_hex(&serde_json::to_vec(&material).expect("key material serializes"))
    }

    pub fn trace_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.wcip"))
    }

    pub fn manifest_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Reads and checks an entry; the error names the first failed check.
    pub fn load(&self, key: &str, s: &Scenario, eta: &FrequencySample64) -> Result<ControlFunction64, String> {
        let text = fs::read_to_string(self.manifest_path(key)).map_err(|e| format!("manifest: {e}"))?;
        let m: CacheManifest = serde_json::from_str(&text).map_err(|e| format!("manifest: {e}"))?;
        if m.key != key {
            return Err(format!("manifest key {} does not match", m.key));
        }
        if m.eta != eta.eta() {
            return Err(format!("manifest frequency {:?} does not match", m.eta));
        }
        let bytes = fs::read(self.trace_path(key)).map_err(|e| format!("trace: {e}"))?;
        if sha256_hex(&bytes) != m.trace_sha256 {
            return Err("trace file does not match its manifest".into());
        }
        let c = decode(&bytes).map_err(|e| format!("trace: {e}"))?;
        if c.header.quantity != Quantity::Control {
            return Err(format!("trace holds `{}`, not a control", c.header.quantity.tag()));
        }
        let g = container_trace::<f64>(&c).map_err(|e| format!("trace: {e}"))?;
        if g.steps() != s.grid.nt() + 1 || g.samples() != s.partition.len() {
            return Err(format!("trace shape {:?} does not fit the grid", g.values.dim()));
        }
        Ok(ControlFunction {
            g,
            eta: *eta,
            residual_energy: m.residual_energy,
            iterations: m.iterations,
            regularization: m.regularization,
            certified: m.certified,
            initial_energy: m.initial_energy,
            residual_history: m.residual_history,
        })
    }

    /// Writes the entry and returns the control as it will be read back, with
    /// the trace rounded to the payload precision.
    pub fn store(&self, key: &str, s: &Scenario, mut control: ControlFunction64) -> Result<ControlFunction64, CliError> {
        let bytes = encode(&trace_container(&control.g, &s.grid, s.payload))?;
        write_atomic(&self.trace_path(key), &bytes)?;
        let manifest = CacheManifest {
            key: key.to_string(),
            eta: control.eta.eta(),
            residual_energy: control.residual_energy,
            iterations: control.iterations,
            epsilon: s.pipeline.hum.epsilon,
            regularization: control.regularization,
            certified: control.certified,
            initial_energy: control.initial_energy,
            residual_history: control.residual_history.clone(),
            trace_sha256: sha256_hex(&bytes),
            created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        write_json(&self.manifest_path(key), &manifest)?;
        control.g = container_trace(&decode(&bytes)?)?;
        Ok(control)
    }

    /// Cached control for `eta`, solving and storing it when needed. With a
    /// `complex64` payload the returned control is the stored (rounded) one,
    /// so hits and misses agree bit for bit.
    pub fn get_or_solve(&self, s: &Scenario, eta: &FrequencySample64) -> Result<(ControlFunction64, CacheOutcome), CliError> {
        let key = Self::key(s, eta);
        let outcome = if self.manifest_path(&key).exists() || self.trace_path(&key).exists() {
            match self.load(&key, s, eta) {
                Ok(c) => return Ok((c, CacheOutcome::Hit)),
                Err(reason) => CacheOutcome::Replaced(reason),
            }
        } else {
            CacheOutcome::Miss
        };
        let control = solve_control(eta, &s.beta, &s.grid, s.coeff.c0(), &s.partition, &s.pipeline.hum)?;
        Ok((self.store(&key, s, control)?, outcome))
    }
}
