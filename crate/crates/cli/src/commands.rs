//! The four subcommands.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wavecip::container::{encode, field_container, trace_container};
use wavecip::domain::FrequencySample;
use wavecip::hum::verify_null_control;
use wavecip::recon::{
    band_limited_projection, fourier_oracle, fourier_sample_with_control, invert_fourier, prop31_check, rel_l2_on,
    FourierSample, FourierSampleSet, FunctionalScaling,
};
use wavecip::theta::{solve_theta_ode, solve_theta_volterra, theta_rel_l2};
use wavecip::wave::{dtn_apply, perturbation_sup_l2};
use wavecip::{ControlFunction64, Cplx, FrequencySample64, GridSpec64};

use crate::artifacts::{eta_tag, write_json, Manifest};
use crate::cache::{CacheOutcome, ControlCache};
use crate::config::Scenario;
use crate::CliError;

const GCC_WARNING: &str =
    "geometric control condition presumed violated for this Γ and T; control certification is expected to fail";

fn eta_json(eta: [f64; 2]) -> serde_json::Value {
    json!([eta[0], eta[1]])
}

// ---------------------------------------------------------------- forward

#[derive(Debug)]
pub struct ForwardReport {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub eta: [f64; 2],
    pub alpha: f64,
    pub difference_sup: f64,
}

/// Writes `Λ_α(f̃)`, `Λ₀(f̃)` and their difference on Γ for one frequency.
pub fn cmd_forward(s: &Scenario, eta: &FrequencySample64, alpha: Option<f64>) -> Result<ForwardReport, CliError> {
    let alpha = alpha.unwrap_or_else(|| s.alpha());
    let perturbed = dtn_apply(alpha, eta, &s.coeff, &s.grid, &s.partition)?;
    let background = dtn_apply(0.0, eta, &s.coeff, &s.grid, &s.partition)?;
    let mut diff = perturbed.difference(&background, wavecip::wave::Quantity::DtnDifference)?;
    diff.alpha = Some(alpha);

    let dir = s.out_dir.join("forward").join(eta_tag(eta.eta()));
    let mut manifest = Manifest::new(
        "forward",
        s,
        json!({
            "eta": eta_json(eta.eta()),
            "alpha": alpha,
            "nt": s.grid.nt(),
            "dt": s.grid.dt(),
            "gamma_samples": s.partition.len(),
            "difference_sup": diff.sup_norm(),
        }),
    );
    let mut files = Vec::new();
    for (name, trace) in [("lambda_alpha.wcip", &perturbed), ("lambda_0.wcip", &background), ("difference.wcip", &diff)] {
        let bytes = encode(&trace_container(trace, &s.grid, s.payload))?;
        files.push(manifest.add_file(&dir, name, &bytes)?);
    }
    files.push(manifest.write(&dir)?);
    Ok(ForwardReport {
        dir,
        files,
        eta: eta.eta(),
        alpha,
        difference_sup: diff.sup_norm(),
    })
}

// ---------------------------------------------------------------- control

#[derive(Debug)]
pub struct ControlReport {
    pub control: ControlFunction64,
    pub outcome: CacheOutcome,
    pub key: String,
    pub dir: PathBuf,
    pub gcc_presumed: bool,
}

/// Cached HUM control for one frequency, also exported to the output tree.
pub fn cmd_control(s: &Scenario, eta: &FrequencySample64) -> Result<ControlReport, CliError> {
    let cache = ControlCache::for_scenario(s);
    let key = ControlCache::key(s, eta);
    let (control, outcome) = cache.get_or_solve(s, eta)?;
    let dir = s.out_dir.join("control").join(eta_tag(eta.eta()));
    let mut manifest = Manifest::new(
        "control",
        s,
        json!({
            "eta": eta_json(eta.eta()),
            "cache_key": key,
            "certified": control.certified,
            "residual_energy": control.residual_energy,
            "iterations": control.iterations,
            "regularization": control.regularization,
            "initial_energy": control.initial_energy,
        }),
    );
    let bytes = encode(&trace_container(&control.g, &s.grid, s.payload))?;
    manifest.add_file(&dir, "control.wcip", &bytes)?;
    manifest.write(&dir)?;
    Ok(ControlReport {
        control,
        outcome,
        key,
        dir,
        gcc_presumed: s.geometric_control_presumed(),
    })
}

// ---------------------------------------------------------------- reconstruct

/// One row of `samples.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub eta_x: f64,
    pub eta_y: f64,
    pub re_f: f64,
    pub im_f: f64,
    pub form: String,
    pub certified: bool,
    pub theta_re: f64,
    pub theta_im: f64,
    pub g_re: f64,
    pub g_im: f64,
    pub residual_energy: f64,
    pub iterations: usize,
    pub dtn_sup: f64,
}

impl SampleRow {
    fn new(s: &FourierSample<f64>, form: &str) -> Self {
        Self {
            eta_x: s.eta[0],
            eta_y: s.eta[1],
            re_f: s.f_est.re,
            im_f: s.f_est.im,
            form: form.to_string(),
            certified: s.certified,
            theta_re: s.functional_theta.re,
            theta_im: s.functional_theta.im,
            g_re: s.functional_g.re,
            g_im: s.functional_g.im,
            residual_energy: s.residual_energy,
            iterations: s.iterations,
            dtn_sup: s.dtn_sup,
        }
    }

    fn sample(&self) -> FourierSample<f64> {
        FourierSample {
            eta: [self.eta_x, self.eta_y],
            functional_theta: Cplx::new(self.theta_re, self.theta_im),
            functional_g: Cplx::new(self.g_re, self.g_im),
            f_est: Cplx::new(self.re_f, self.im_f),
            certified: self.certified,
            residual_energy: self.residual_energy,
            iterations: self.iterations,
            dtn_sup: self.dtn_sup,
        }
    }
}

/// Reads whatever complete rows a (possibly truncated) sample file holds.
pub fn read_sample_rows(path: &Path) -> Result<Vec<SampleRow>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    Ok(rdr.deserialize::<SampleRow>().filter_map(|r| r.ok()).collect())
}

fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Solver(format!("csv: {other:?}")),
    }
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Solver(e.to_string()))
}

#[derive(Debug, Clone, Default)]
pub struct ReconstructOptions {
    pub resume: bool,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub rel_l2_band_limited: Option<f64>,
    pub rel_l2_truth: f64,
    /// Relative ℓ² distance of the estimates to the quadrature oracle over
    /// the used lattice points.
    pub rel_l2_samples_vs_oracle: f64,
    pub imag_residue: f64,
    pub imag_flagged: bool,
    pub hermitian_residue: f64,
    pub certified_fraction: f64,
    pub lattice_len: usize,
    pub used: usize,
    pub excluded: Vec<[f64; 2]>,
    pub excluded_fraction: f64,
}

#[derive(Debug)]
pub struct ReconstructReport {
    pub dir: PathBuf,
    pub computed: usize,
    pub reused: usize,
    pub cache_hits: usize,
    pub metrics: Metrics,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct SampleSetHeader {
    config_hash: String,
    lattice_len: usize,
}

struct Job {
    sample: FourierSample<f64>,
    hit: bool,
}

fn run_eta(s: &Scenario, cache: &ControlCache, eta: &FrequencySample64) -> Result<Job, CliError> {
    let (control, outcome) = cache.get_or_solve(s, eta)?;
    let out = fourier_sample_with_control(eta, s.alpha(), &s.coeff, &s.grid, &s.partition, control, &s.pipeline)?;
    Ok(Job {
        sample: out.sample,
        hit: outcome == CacheOutcome::Hit,
    })
}

/// Full pipeline over the η lattice followed by the inversion.
///
/// Rows are appended to `samples.csv` as frequencies finish, so an
/// interrupted run can continue with `resume`; the final file is rewritten in
/// lattice order. When more than the allowed fraction of frequencies is
/// excluded only the samples and the exclusion list are written and a solver
/// error is returned.
pub fn cmd_reconstruct(s: &Scenario, opts: &ReconstructOptions) -> Result<ReconstructReport, CliError> {
    let lattice = s.lattice()?;
    let dir = s.out_dir.join("reconstruct");
    fs::create_dir_all(&dir)?;
    let csv_path = dir.join("samples.csv");
    let header_path = dir.join("samples.json");
    let header = SampleSetHeader {
        config_hash: s.config_hash.clone(),
        lattice_len: lattice.len(),
    };
    let form = s.pipeline.form.name();

    let mut have: Vec<Option<FourierSample<f64>>> = vec![None; lattice.len()];
    let mut reused = 0;
    if opts.resume && csv_path.exists() {
        if let Ok(text) = fs::read_to_string(&header_path) {
            let old: SampleSetHeader =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", header_path.display())))?;
            if old != header {
                return Err(CliError::Config(format!(
                    "{} belongs to a different scenario (config hash {})",
                    csv_path.display(),
                    old.config_hash
                )));
            }
        }
        let probe = FourierSampleSet {
            samples: lattice.samples().iter().map(|e| placeholder(e.eta())).collect(),
            d_eta: lattice.d_eta(),
            alpha: s.alpha(),
            scaling: s.pipeline.scaling,
            form: s.pipeline.form,
        };
        for row in read_sample_rows(&csv_path)? {
            if row.form != form {
                continue;
            }
            if let Some(i) = probe.find([row.eta_x, row.eta_y]) {
                if have[i].is_none() {
                    reused += 1;
                }
                have[i] = Some(row.sample());
            }
        }
    }
    write_json(&header_path, &header)?;
    // Start the append log from the rows being kept.
    let kept: Vec<SampleRow> = have.iter().flatten().map(|x| SampleRow::new(x, form)).collect();
    wavecip::container::write_atomic(&csv_path, &csv_bytes(kept)?)?;

    let todo: Vec<usize> = (0..lattice.len()).filter(|&i| have[i].is_none()).collect();
    let log = Mutex::new(
        csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(OpenOptions::new().append(true).open(&csv_path)?),
    );
    let cache = ControlCache::for_scenario(s);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    let results: Vec<Result<(usize, Job), CliError>> = pool.install(|| {
        todo.par_iter()
            .map(|&i| {
                let job = run_eta(s, &cache, &lattice.samples()[i])?;
                let mut w = log.lock().expect("sample log lock");
                w.serialize(SampleRow::new(&job.sample, form)).map_err(csv_err)?;
                w.flush()?;
                Ok((i, job))
            })
            .collect()
    });
    drop(log);
    let mut cache_hits = 0;
    for r in results {
        let (i, job) = r?;
        cache_hits += usize::from(job.hit);
        have[i] = Some(job.sample);
    }

    let set = FourierSampleSet {
        samples: have.into_iter().map(|x| x.expect("every lattice point computed")).collect(),
        d_eta: lattice.d_eta(),
        alpha: s.alpha(),
        scaling: s.pipeline.scaling,
        form: s.pipeline.form,
    };
    let include = s.config.recon.include_uncertified;
    let rows: Vec<SampleRow> = set.samples.iter().map(|x| SampleRow::new(x, form)).collect();
    let samples_csv = csv_bytes(rows)?;
    let excluded = excluded_frequencies(&set, include);
    let excluded_fraction = excluded.len() as f64 / lattice.len() as f64;
    if excluded_fraction > s.config.recon.max_excluded_fraction {
        wavecip::container::write_atomic(&csv_path, &samples_csv)?;
        write_json(
            &dir.join("metrics.json"),
            &json!({
                "certified_fraction": set.certified_fraction(),
                "lattice_len": lattice.len(),
                "excluded": excluded,
                "excluded_fraction": excluded_fraction,
            }),
        )?;
        return Err(CliError::Solver(format!(
            "{} of {} frequencies excluded (limit {:.0}%): {}",
            excluded.len(),
            lattice.len(),
            100.0 * s.config.recon.max_excluded_fraction,
            excluded.iter().map(|e| format!("({:.4}, {:.4})", e[0], e[1])).collect::<Vec<_>>().join(" ")
        )));
    }
    let result = invert_fourier(&set, &s.grid, s.coeff.c0(), s.constant, include)?;

    let c1_true = s.coeff.c1();
    let inner = s.coeff.omega_prime();
    let reference = band_limited_projection(&s.grid, c1_true, &lattice).ok();
    let (mut num, mut den) = (0.0, 0.0);
    for x in &set.samples {
        if result.excluded.contains(&x.eta) {
            continue;
        }
        let o = fourier_oracle(&s.grid, c1_true, &FrequencySample::new(x.eta)?);
        num += (x.f_est - o).norm_sqr();
        den += o.norm_sqr();
    }
    let metrics = Metrics {
        rel_l2_band_limited: reference.as_ref().map(|r| rel_l2_on(&s.grid, &result.c1_est, r, inner)),
        rel_l2_truth: rel_l2_on(&s.grid, &result.c1_est, c1_true, inner),
        rel_l2_samples_vs_oracle: if den > 0.0 { (num / den).sqrt() } else { num.sqrt() },
        imag_residue: result.imag_residue,
        imag_flagged: result.flagged,
        hermitian_residue: set.hermitian_residue(),
        certified_fraction: set.certified_fraction(),
        lattice_len: lattice.len(),
        used: result.used,
        excluded_fraction: result.excluded.len() as f64 / lattice.len() as f64,
        excluded: result.excluded.clone(),
    };

    let mut manifest = Manifest::new(
        "reconstruct",
        s,
        json!({
            "eta_max": lattice.eta_max(),
            "d_eta": lattice.d_eta(),
            "lattice_len": lattice.len(),
            "alpha": s.alpha(),
            "scaling": s.pipeline.scaling.name(),
            "form": form,
            "constant": s.config.recon.constant,
            "include_uncertified": include,
            "metrics": metrics,
        }),
    );
    manifest.add_file(&dir, "samples.csv", &samples_csv)?;
    manifest.add_file(&dir, "c1_est.wcip", &encode(&field_container(&result.c1_est, &s.grid))?)?;
    manifest.add_file(&dir, "calpha_est.wcip", &encode(&field_container(&result.calpha_est, &s.grid))?)?;
    manifest.add_file(&dir, "c1_true.wcip", &encode(&field_container(c1_true, &s.grid))?)?;
    if let Some(r) = &reference {
        manifest.add_file(&dir, "c1_reference.wcip", &encode(&field_container(r, &s.grid))?)?;
    }
    let center = s.config.bump.center;
    let (sx, sy) = slices(&s.grid, center, c1_true, reference.as_ref(), &result.c1_est);
    manifest.add_file(&dir, "slice_x.csv", &csv_bytes(sx)?)?;
    manifest.add_file(&dir, "slice_y.csv", &csv_bytes(sy)?)?;
    manifest.add_file(&dir, "spectrum.csv", &csv_bytes(spectrum(s, &set)?)?)?;
    manifest.add_file(&dir, "plot.py", PLOT_SCRIPT.as_bytes())?;
    manifest.add_file(&dir, "metrics.json", format!("{}\n", serde_json::to_string_pretty(&metrics).expect("metrics serialize")).as_bytes())?;
    manifest.write(&dir)?;

    Ok(ReconstructReport {
        dir,
        computed: todo.len(),
        reused,
        cache_hits,
        metrics,
    })
}

/// Frequencies the inversion drops: uncertified ones and those whose mirror is.
fn excluded_frequencies(set: &FourierSampleSet<f64>, include_uncertified: bool) -> Vec<[f64; 2]> {
    if include_uncertified {
        return Vec::new();
    }
    set.samples
        .iter()
        .filter(|x| {
            let mirror = set.find([-x.eta[0], -x.eta[1]]).map(|m| set.samples[m].certified);
            !(x.certified && mirror.unwrap_or(false))
        })
        .map(|x| x.eta)
        .collect()
}

fn placeholder(eta: [f64; 2]) -> FourierSample<f64> {
    let z = Cplx::new(0.0, 0.0);
    FourierSample {
        eta,
        functional_theta: z,
        functional_g: z,
        f_est: z,
        certified: false,
        residual_energy: 0.0,
        iterations: 0,
        dtn_sup: 0.0,
    }
}

#[derive(Serialize)]
struct SliceRow {
    coord: f64,
    c1_true: f64,
    c1_reference: Option<f64>,
    c1_est: f64,
}

type Field = ndarray::Array2<f64>;

/// Rows through the node nearest `center`, along x and along y.
fn slices(
    grid: &GridSpec64,
    center: [f64; 2],
    truth: &Field,
    reference: Option<&Field>,
    est: &Field,
) -> (Vec<SliceRow>, Vec<SliceRow>) {
    let ic = ((center[0] / grid.hx()).round() as usize).min(grid.nx());
    let jc = ((center[1] / grid.hy()).round() as usize).min(grid.ny());
    let row = |coord: f64, at: [usize; 2]| SliceRow {
        coord,
        c1_true: truth[at],
        c1_reference: reference.map(|r| r[at]),
        c1_est: est[at],
    };
    let sx = (0..=grid.nx()).map(|i| row(grid.x(i), [i, jc])).collect();
    let sy = (0..=grid.ny()).map(|j| row(grid.y(j), [ic, j])).collect();
    (sx, sy)
}

#[derive(Serialize)]
struct SpectrumRow {
    eta_x: f64,
    eta_y: f64,
    abs_f: f64,
    abs_oracle: f64,
    re_f: f64,
    im_f: f64,
    re_oracle: f64,
    im_oracle: f64,
    certified: bool,
}

fn spectrum(s: &Scenario, set: &FourierSampleSet<f64>) -> Result<Vec<SpectrumRow>, CliError> {
    set.samples
        .iter()
        .map(|x| {
            let o = fourier_oracle(&s.grid, s.coeff.c1(), &FrequencySample::new(x.eta)?);
            Ok(SpectrumRow {
                eta_x: x.eta[0],
                eta_y: x.eta[1],
                abs_f: x.f_est.norm(),
                abs_oracle: o.norm(),
                re_f: x.f_est.re,
                im_f: x.f_est.im,
                re_oracle: o.re,
                im_oracle: o.im,
                certified: x.certified,
            })
        })
        .collect()
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
# Figures for one reconstruction directory: python3 plot.py [dir]
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

d = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent


def table(name):
    return np.genfromtxt(d / name, delimiter=",", names=True, dtype=None, encoding=None)


fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))
for ax, name, label in [(axes[0], "slice_x.csv", "x"), (axes[1], "slice_y.csv", "y")]:
    t = table(name)
    ax.plot(t["coord"], t["c1_true"], "k-", label="c1")
    if "c1_reference" in t.dtype.names:
        ax.plot(t["coord"], t["c1_reference"], "b--", label="band-limited")
    ax.plot(t["coord"], t["c1_est"], "r-", label="reconstructed")
    ax.set_xlabel(label)
    ax.legend()

s = table("spectrum.csv")
ex, ey = np.unique(s["eta_x"]), np.unique(s["eta_y"])
grid = np.full((len(ey), len(ex)), np.nan)
for row in s:
    grid[np.searchsorted(ey, row["eta_y"]), np.searchsorted(ex, row["eta_x"])] = row["abs_f"]
im = axes[2].imshow(grid, origin="lower", extent=[ex[0], ex[-1], ey[0], ey[-1]], aspect="equal")
axes[2].set_title("|F(eta)|")
fig.colorbar(im, ax=axes[2])
fig.tight_layout()
fig.savefig(d / "reconstruction.png", dpi=120)
"#;

// ---------------------------------------------------------------- validate

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<width$}  {:>11.4e}  ({})  {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
                c.detail
            ));
        }
        out
    }
}

/// The three frequencies used by the identity checks.
pub fn validation_etas(probe: [f64; 2]) -> [[f64; 2]; 3] {
    let [a, b] = probe;
    [probe, [-b, a], [0.5 * (a - b), 0.5 * (a + b)]]
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Identity, rate and cross-method checks on the scenario. Failed checks
/// are reported, not returned as errors.
pub fn cmd_validate(s: &Scenario) -> Result<ValidationReport, CliError> {
    let mut warnings = Vec::new();
    if !s.geometric_control_presumed() {
        warnings.push(GCC_WARNING.to_string());
    }
    let cache = ControlCache::for_scenario(s);
    let mut checks = Vec::new();
    let literal = s.pipeline.scaling == FunctionalScaling::Literal;

    let mut probe_control = None;
    for eta in validation_etas(s.probe.eta()) {
        let eta = FrequencySample::new(eta)?;
        let (control, _) = cache.get_or_solve(s, &eta)?;
        let tag = format!("({:.4}, {:.4})", eta.eta()[0], eta.eta()[1]);
        checks.push(Check {
            name: format!("control certified η={tag}"),
            measured: control.residual_energy,
            tolerance: format!("E(T)/E(0) ≤ {:.1e}", s.pipeline.hum.cg_tol),
            pass: control.certified,
            detail: format!("{} iterations", control.iterations),
        });
        let resim = verify_null_control(&control, &s.beta, &s.grid, s.coeff.c0(), &s.partition)?;
        let rel = if control.residual_energy > 0.0 {
            (resim - control.residual_energy).abs() / control.residual_energy
        } else {
            resim
        };
        checks.push(Check {
            name: format!("control re-simulation η={tag}"),
            measured: rel,
            tolerance: "≤ 10% relative".into(),
            pass: rel <= 0.1,
            detail: format!("re-simulated E(T)/E(0) = {resim:.4e}"),
        });
        let r = prop31_check(&eta, &s.coeff, &control, &s.grid, &s.partition)?;
        let (gap, which) = if literal {
            (r.literal_gap(), "|lhs − rhs|/|rhs|")
        } else {
            (r.derived_gap(), "|lhs + rhs|/|rhs|")
        };
        checks.push(Check {
            name: format!("pairing identity η={tag}"),
            measured: gap,
            tolerance: "≤ 5%".into(),
            pass: gap <= 0.05,
            detail: format!("{which}; lhs = {:.4e}, rhs = {:.4e}", r.lhs, r.rhs),
        });
        if probe_control.is_none() {
            probe_control = Some(control);
        }
    }
    let control = probe_control.expect("three frequencies checked");

    let alphas = [2.0 * s.alpha(), s.alpha(), 0.5 * s.alpha()];
    let norms = alphas
        .iter()
        .map(|&a| perturbation_sup_l2(a, &s.probe, &s.coeff, &s.grid))
        .collect::<Result<Vec<_>, _>>()?;
    let slope = loglog_slope(&alphas, &norms);
    checks.push(Check {
        name: "perturbation α-slope".into(),
        measured: slope,
        tolerance: "1 ± 0.15".into(),
        pass: (slope - 1.0).abs() <= 0.15,
        detail: format!(
            "sup_t ‖u_α − u₀‖ = {}",
            norms.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(", ")
        ),
    });

    let ode = solve_theta_ode(&control)?;
    let volterra = solve_theta_volterra(&control)?;
    let gap = theta_rel_l2(&ode, &volterra);
    checks.push(Check {
        name: "θ ODE vs Volterra".into(),
        measured: gap,
        tolerance: "≤ 1% relative L²".into(),
        pass: gap <= 0.01 && control.certified,
        detail: format!("control certified: {}", control.certified),
    });

    let out = fourier_sample_with_control(&s.probe, s.alpha(), &s.coeff, &s.grid, &s.partition, control, &s.pipeline)?;
    let form_gap = out.sample.form_gap();
    checks.push(Check {
        name: "θ-form vs g-form functional".into(),
        measured: form_gap,
        tolerance: "≤ 1% relative".into(),
        pass: form_gap <= 0.01,
        detail: format!("θ-form {:.4e}, g-form {:.4e}", out.sample.functional_theta, out.sample.functional_g),
    });

    let report = ValidationReport { checks, warnings };
    let dir = s.out_dir.join("validate");
    let mut manifest = Manifest::new(
        "validate",
        s,
        json!({ "scaling": s.pipeline.scaling.name(), "probe_eta": eta_json(s.probe.eta()) }),
    );
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    manifest.add_file(&dir, "report.json", text.as_bytes())?;
    manifest.write(&dir)?;
    Ok(report)
}
