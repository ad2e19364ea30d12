//! Scenario files.
//!
//! A scenario is a TOML document with six required sections. Every key inside
//! a section has a default, so `[grid]` on its own line means "default grid".
//!
//! ```toml
//! run_id = "default"
//!
//! [grid]
//! lx = 1.0
//! ly = 1.0
//! nx = 64
//! ny = 64
//! t_final = 4.0
//! # dt = 0.00625          # optional; otherwise 0.8 * cfl_factor * h * sqrt(c_min)
//! cfl_factor = 0.5
//!
//! [boundary]
//! sides = ["right", "top"]  # the observed patch Γ
//!
//! [coefficient]
//! c0 = 1.0
//! alpha = 0.02
//! # c_star = 0.5           # lower bound on c0 + alpha c1; defaults to c0 / 2
//! inner_half_width = [0.25, 0.25]   # Ω′, centered in the domain
//! cutoff_margin = 0.125
//!
//! [bump]
//! center = [0.5, 0.5]
//! radius = 0.2
//! amplitude = 1.0
//!
//! [control]
//! cg_tol = 1e-3
//! cg_max_iters = 200
//! epsilon = 1e-6
//! filter = false
//! taper_fraction = 0.05
//! payload = "complex128"    # or "complex64"
//! # cache_dir = "cache"     # relative to the output directory
//!
//! [recon]
//! eta_max = "4pi"
//! d_eta = "pi/2"
//! probe_eta = ["2pi", 0]
//! scaling = "linearized"    # or "literal"
//! form = "theta"            # or "g"
//! constant = "derived"      # or "bare"
//! include_uncertified = false
//! max_excluded_fraction = 0.2
//! ```
//!
//! Frequencies accept plain numbers or multiples of π written as `"4pi"`,
//! `"-pi"`, `"pi/2"` or `"1.5π"`.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use wavecip::container::Payload;
use wavecip::domain::{build_grid, make_bump_c1, make_cutoff_beta, BoundaryPartition, CoefficientField, FrequencySample, GridConfig, Region, Side};
use wavecip::hum::HumConfig;
use wavecip::recon::{FrequencyGrid, FunctionalForm, FunctionalScaling, InversionConstant, PipelineConfig};
use wavecip::{BoundaryPartition64, CoefficientField64, CutoffField64, FrequencySample64, GridSpec64};

use crate::CliError;

/// Parses `"3"`, `"-1.5"`, `"4pi"`, `"-pi"`, `"pi/2"`, `"0.5π"`.
pub fn parse_freq(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let (coef, unit) = match num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        Some(c) => (c.trim().trim_end_matches('*').trim(), PI),
        None => (num, 1.0),
    };
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    let v = c * unit / den;
    v.is_finite().then_some(v)
}

/// A frequency written either as a number or as a multiple of π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Freq(pub f64);

impl<'de> Deserialize<'de> for Freq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Freq(v)),
            Raw::Int(v) => Ok(Freq(v as f64)),
            Raw::Text(s) => parse_freq(&s)
                .map(Freq)
                .ok_or_else(|| serde::de::Error::custom(format!("cannot read `{s}` as a frequency"))),
        }
    }
}

impl Serialize for Freq {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub t_final: f64,
    pub dt: Option<f64>,
    pub cfl_factor: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            nx: 64,
            ny: 64,
            t_final: 4.0,
            dt: None,
            cfl_factor: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub sides: Vec<String>,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self {
            sides: vec!["right".into(), "top".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientSection {
    pub c0: f64,
    pub alpha: f64,
    pub c_star: Option<f64>,
    pub inner_half_width: [f64; 2],
    pub cutoff_margin: f64,
}

impl Default for CoefficientSection {
    fn default() -> Self {
        Self {
            c0: 1.0,
            alpha: 0.02,
            c_star: None,
            inner_half_width: [0.25, 0.25],
            cutoff_margin: 0.125,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BumpSection {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl Default for BumpSection {
    fn default() -> Self {
        Self {
            center: [0.5, 0.5],
            radius: 0.2,
            amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub epsilon: f64,
    pub filter: bool,
    pub taper_fraction: f64,
    pub payload: String,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ControlSection {
    fn default() -> Self {
        let h = HumConfig::<f64>::default();
        Self {
            cg_tol: h.cg_tol,
            cg_max_iters: h.cg_max_iters,
            epsilon: h.epsilon,
            filter: h.filter,
            taper_fraction: h.taper_fraction,
            payload: "complex128".into(),
            cache_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconSection {
    pub eta_max: Freq,
    pub d_eta: Freq,
    pub probe_eta: [Freq; 2],
    pub scaling: String,
    pub form: String,
    pub constant: String,
    pub include_uncertified: bool,
    pub max_excluded_fraction: f64,
}

impl Default for ReconSection {
    fn default() -> Self {
        Self {
            eta_max: Freq(4.0 * PI),
            d_eta: Freq(0.5 * PI),
            probe_eta: [Freq(2.0 * PI), Freq(0.0)],
            scaling: "linearized".into(),
            form: "theta".into(),
            constant: "derived".into(),
            include_uncertified: false,
            max_excluded_fraction: 0.2,
        }
    }
}

fn default_run_id() -> String {
    "default".into()
}

/// The scenario file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_run_id")]
    pub run_id: String,
    pub grid: GridSection,
    pub boundary: BoundarySection,
    pub coefficient: CoefficientSection,
    pub bump: BumpSection,
    pub control: ControlSection,
    pub recon: ReconSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            run_id: default_run_id(),
            grid: GridSection::default(),
            boundary: BoundarySection::default(),
            coefficient: CoefficientSection::default(),
            bump: BumpSection::default(),
            control: ControlSection::default(),
            recon: ReconSection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        hex(&Sha256::digest(json))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub paper_constant: bool,
    pub scaling: Option<String>,
    pub form: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if self.paper_constant {
            cfg.recon.constant = "bare".into();
        }
        if let Some(s) = &self.scaling {
            cfg.recon.scaling = s.clone();
        }
        if let Some(f) = &self.form {
            cfg.recon.form = f.clone();
        }
    }
}

/// A validated scenario with every derived object built.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub run_id: String,
    pub out_dir: PathBuf,
    pub config_hash: String,
    pub grid: GridSpec64,
    pub partition: BoundaryPartition64,
    pub coeff: CoefficientField64,
    pub beta: CutoffField64,
    pub pipeline: PipelineConfig<f64>,
    pub payload: Payload,
    pub constant: InversionConstant,
    pub probe: FrequencySample64,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("run_id", &self.run_id)
            .field("out_dir", &self.out_dir)
            .field("config_hash", &self.config_hash)
            .finish_non_exhaustive()
    }
}

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl Scenario {
    /// Reads `path` (or the built-in default) and builds the scenario. The
    /// output directory defaults to `runs/<run_id>`.
    pub fn load(path: Option<&Path>, out: Option<PathBuf>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                ScenarioConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => ScenarioConfig::default(),
        };
        overrides.apply(&mut cfg);
        Self::build(cfg, out)
    }

    pub fn build(config: ScenarioConfig, out: Option<PathBuf>) -> Result<Self, CliError> {
        let g = &config.grid;
        let k = &config.coefficient;
        let b = &config.bump;
        let c_min = k.c0.min(k.c0 + k.alpha * b.amplitude.min(0.0));
        let grid = build_grid(&GridConfig {
            lx: g.lx,
            ly: g.ly,
            nx: g.nx,
            ny: g.ny,
            hx: None,
            hy: None,
            t_final: g.t_final,
            dt: g.dt,
            nt: None,
            cfl_factor: g.cfl_factor,
            c_min: None,
        })
        .map_err(config_err)?;

        let sides = config
            .boundary
            .sides
            .iter()
            .map(|s| Side::parse(s).ok_or_else(|| CliError::Config(format!("boundary.sides: unknown side `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let partition = BoundaryPartition::new(&grid, &sides).map_err(config_err)?;

        let inner = Region::centered_rect(g.lx, g.ly, k.inner_half_width[0], k.inner_half_width[1]);
        let c1 = make_bump_c1(&grid, b.center, b.radius, b.amplitude, &inner).map_err(config_err)?;
        let c0 = ndarray::Array2::from_elem(grid.shape(), k.c0);
        let coeff = CoefficientField::new(&grid, c0, c1, k.alpha, k.c0, k.c_star.unwrap_or(0.5 * k.c0), inner.clone())
            .map_err(config_err)?;
        grid.check_cfl(c_min.min(coeff.calpha_min())).map_err(config_err)?;
        let beta = make_cutoff_beta(&grid, &inner, k.cutoff_margin).map_err(config_err)?;

        let c = &config.control;
        let hum = HumConfig {
            cg_tol: c.cg_tol,
            cg_max_iters: c.cg_max_iters,
            epsilon: c.epsilon,
            filter: c.filter,
            taper_fraction: c.taper_fraction,
        };
        hum.validate().map_err(config_err)?;
        let payload = match Payload::parse(&c.payload) {
            Some(p @ (Payload::Complex128 | Payload::Complex64)) => p,
            _ => return Err(CliError::Config(format!("control.payload: expected complex128 or complex64, got `{}`", c.payload))),
        };

        let r = &config.recon;
        let scaling = FunctionalScaling::parse(&r.scaling)
            .ok_or_else(|| CliError::Config(format!("recon.scaling: expected linearized or literal, got `{}`", r.scaling)))?;
        let form = FunctionalForm::parse(&r.form)
            .ok_or_else(|| CliError::Config(format!("recon.form: expected theta or g, got `{}`", r.form)))?;
        let constant = match r.constant.as_str() {
            "derived" => InversionConstant::Derived,
            "bare" => InversionConstant::Bare,
            other => return Err(CliError::Config(format!("recon.constant: expected derived or bare, got `{other}`"))),
        };
        if !(0.0..=1.0).contains(&r.max_excluded_fraction) {
            return Err(CliError::Config("recon.max_excluded_fraction must lie in [0, 1]".into()));
        }
        let probe = FrequencySample::new([r.probe_eta[0].0, r.probe_eta[1].0])
            .map_err(|e| CliError::Config(format!("recon.probe_eta: {e}")))?;

        let run_id = config.run_id.clone();
        if run_id.is_empty() || run_id.contains(['/', '\\']) {
            return Err(CliError::Config(format!("run_id `{run_id}` must be a non-empty file name")));
        }
        let out_dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&run_id));
        Ok(Self {
            config_hash: config.hash(),
            run_id,
            out_dir,
            grid,
            partition,
            coeff,
            beta,
            pipeline: PipelineConfig { hum, scaling, form },
            payload,
            constant,
            probe,
            config,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.config.coefficient.alpha
    }

    /// The η lattice; an empty one is a configuration error.
    pub fn lattice(&self) -> Result<FrequencyGrid<f64>, CliError> {
        FrequencyGrid::new(self.config.recon.eta_max.0, self.config.recon.d_eta.0, &self.grid).map_err(config_err)
    }

    pub fn cache_dir(&self) -> PathBuf {
        match &self.config.control.cache_dir {
            Some(d) if d.is_absolute() => d.clone(),
            Some(d) => self.out_dir.join(d),
            None => self.out_dir.join("cache"),
        }
    }

    /// False when Γ and T fail the rough geometric-control test.
    pub fn geometric_control_presumed(&self) -> bool {
        // The control problem only sees c₀.
        self.partition.presumed_geometric_control(&self.grid, self.coeff.c0_max())
    }
}
