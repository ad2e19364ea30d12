use std::f64::consts::PI;

use wavecip::domain::{bump_value, build_grid, make_bump_c1, make_cutoff_beta, BoundaryPartition, CoefficientField, FrequencySample, GridConfig, GridSpec, RField, Region};
use wavecip::hum::{solve_control, HumConfig};
use wavecip::recon::{
    band_limited_projection, fourier_oracle, fourier_sample, fourier_sample_with_control, functional_g, functional_ibp,
    functional_theta, invert_fourier, oracle_sample_set, prop31_check, rel_l2_on, FrequencyGrid, InversionConstant,
    PipelineConfig,
};
use wavecip::theta::solve_theta_ode;
use wavecip::wave::dtn_difference;
use wavecip::Cplx;

const CENTER: [f64; 2] = [0.5, 0.5];
const RADIUS: f64 = 0.2;

fn inner() -> Region<f64> {
    Region::centered_rect(1.0, 1.0, 0.25, 0.25)
}

fn bump(g: &GridSpec<f64>) -> RField<f64> {
    make_bump_c1(g, CENTER, RADIUS, 1.0, &inner()).unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// J₀ from its integral representation.
fn bessel_j0(x: f64) -> f64 {
    simpson(|tau| (x * tau.sin()).cos(), 0.0, PI, 400) / PI
}

/// `∫ c₁ e^{2iη·x}` for the radial bump through its Hankel transform.
fn hankel_oracle(eta: [f64; 2]) -> Cplx<f64> {
    let k = 2.0 * eta[0].hypot(eta[1]);
    let radial = simpson(|r| bump_value(r, 0.0, RADIUS, 1.0) * bessel_j0(k * r) * r, 0.0, RADIUS, 800);
    Cplx::new(0.0, 2.0 * (eta[0] * CENTER[0] + eta[1] * CENTER[1])).exp() * (2.0 * PI * radial)
}

#[test]
fn quadrature_oracle_matches_hankel_transform() {
    let g = build_grid(&GridConfig::square(1.0, 64, 1.0)).unwrap();
    let c1 = bump(&g);
    for eta in [[0.5 * PI, 0.0], [2.0 * PI, 0.0], [PI, -1.5 * PI], [4.0 * PI, 4.0 * PI]] {
        let q = fourier_oracle(&g, &c1, &FrequencySample::new(eta).unwrap());
        let h = hankel_oracle(eta);
        assert!((q - h).norm() <= 1e-4 * hankel_oracle([1e-9, 0.0]).norm(), "{eta:?}: {q} vs {h}");
    }
}

#[test]
fn inversion_constant_is_pinned_by_exact_samples() {
    let g = build_grid(&GridConfig::square(1.0, 64, 1.0)).unwrap();
    let c1 = bump(&g);
    let c0 = RField::from_elem(g.shape(), 1.0);
    let lat = FrequencyGrid::new(4.0 * PI, 0.5 * PI, &g).unwrap();
    let set = oracle_sample_set(&g, &c1, &lat);
    let reference = band_limited_projection(&g, &c1, &lat).unwrap();
    let derived = invert_fourier(&set, &g, &c0, InversionConstant::Derived, false).unwrap();
    assert!(rel_l2_on(&g, &derived.c1_est, &reference, &inner()) <= 0.02);
    assert!(derived.imag_residue < 1e-10);
    let bare = invert_fourier(&set, &g, &c0, InversionConstant::Bare, false).unwrap();
    assert!(rel_l2_on(&g, &bare.c1_est, &reference, &inner()) > 1.0);
}

#[test]
fn wider_lattice_resolves_more_of_c1() {
    let g = build_grid(&GridConfig::square(1.0, 64, 1.0)).unwrap();
    let c1 = bump(&g);
    let err = |eta_max: f64| {
        let lat = FrequencyGrid::new(eta_max, 0.5 * PI, &g).unwrap();
        rel_l2_on(&g, &band_limited_projection(&g, &c1, &lat).unwrap(), &c1, &inner())
    };
    let (narrow, wide) = (err(2.0 * PI), err(4.0 * PI));
    assert!(wide < narrow, "{wide} vs {narrow}");
}

struct Pipeline {
    grid: GridSpec<f64>,
    partition: BoundaryPartition<f64>,
    coeff: CoefficientField<f64>,
    beta: wavecip::domain::CutoffField<f64>,
}

fn pipeline(n: usize, c1_zero: bool) -> Pipeline {
    let grid = build_grid(&GridConfig::square(1.0, n, 4.0)).unwrap();
    let c1 = if c1_zero { RField::zeros(grid.shape()) } else { bump(&grid) };
    Pipeline {
        partition: BoundaryPartition::default_for(&grid).unwrap(),
        coeff: CoefficientField::with_constant_background(&grid, 1.0, c1, 0.02, inner()).unwrap(),
        beta: make_cutoff_beta(&grid, &inner(), 0.125).unwrap(),
        grid,
    }
}

#[test]
fn zero_perturbation_gives_zero_sample_and_pairing() {
    let p = pipeline(24, true);
    let eta = FrequencySample::new([2.0 * PI, 0.0]).unwrap();
    let out = fourier_sample(&eta, 0.02, &p.coeff, &p.grid, &p.partition, &p.beta, &PipelineConfig::default()).unwrap();
    assert_eq!(out.sample.f_est.norm(), 0.0);
    assert_eq!(out.sample.dtn_sup, 0.0);
    let r = prop31_check(&eta, &p.coeff, &out.control, &p.grid, &p.partition).unwrap();
    assert_eq!(r.lhs.norm(), 0.0);
    assert_eq!(r.rhs.norm(), 0.0);
}

#[test]
fn functional_forms_agree_on_certified_inputs() {
    let p = pipeline(32, false);
    let eta = FrequencySample::new([2.0 * PI, PI]).unwrap();
    let ctl = solve_control(&eta, &p.beta, &p.grid, p.coeff.c0(), &p.partition, &HumConfig::default()).unwrap();
    assert!(ctl.certified);
    let x = dtn_difference(0.02, &eta, &p.coeff, &p.grid, &p.partition).unwrap();
    let th = solve_theta_ode(&ctl).unwrap();
    let a = functional_theta(&th, &x, &p.partition).unwrap();
    let b = functional_g(&ctl.g, &eta, &x, &p.partition).unwrap();
    let c = functional_ibp(&th, &x, &p.partition).unwrap();
    assert!((a - b).norm() <= 0.01 * a.norm(), "{a} vs {b}");
    assert!((a - c).norm() <= 0.01 * a.norm(), "{a} vs {c}");
    // Zero traces on either side.
    let mut zero = x.clone();
    zero.values.fill(Cplx::new(0.0, 0.0));
    assert_eq!(functional_theta(&th, &zero, &p.partition).unwrap().norm(), 0.0);
    assert_eq!(functional_g(&zero, &eta, &x, &p.partition).unwrap().norm(), 0.0);
}

/// With a tight control the pairing and the sample approach their
/// linearized values.
#[test]
fn tight_control_recovers_fourier_data_with_derived_signs() {
    let p = pipeline(32, false);
    let eta = FrequencySample::new([2.0 * PI, 0.0]).unwrap();
    let cfg = HumConfig {
        cg_tol: 1e-5,
        cg_max_iters: 400,
        ..HumConfig::default()
    };
    let ctl = solve_control(&eta, &p.beta, &p.grid, p.coeff.c0(), &p.partition, &cfg).unwrap();
    let r = prop31_check(&eta, &p.coeff, &ctl, &p.grid, &p.partition).unwrap();
    assert!(r.derived_gap() < 0.02, "derived gap {}", r.derived_gap());
    assert!(r.literal_gap() > 1.9);
    let oracle = fourier_oracle(&p.grid, p.coeff.c1(), &eta);
    let errs: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&a| {
            let s = fourier_sample_with_control(&eta, a, &p.coeff, &p.grid, &p.partition, ctl.clone(), &PipelineConfig::default())
                .unwrap()
                .sample;
            (s.f_est - oracle).norm() / oracle.norm()
        })
        .collect();
    assert!(errs[1] < 0.05, "{errs:?}");
    assert!(errs[2] < errs[0], "{errs:?}");
}
