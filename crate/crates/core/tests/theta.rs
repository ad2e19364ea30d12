use std::f64::consts::PI;

use ndarray::Array2;
use proptest::prelude::*;
use wavecip::domain::{build_grid, make_cutoff_beta, BoundaryPartition, FrequencySample, GridConfig, RField, Region};
use wavecip::hum::{solve_control, HumConfig};
use wavecip::theta::{ode_residual, solve_theta_ode, solve_theta_volterra, solve_theta_volterra_trace, theta_from_trace, theta_rel_l2};
use wavecip::wave::{BoundaryTrace, Quantity};
use wavecip::Cplx;

const T_FINAL: f64 = 4.0;

fn trace(values: Array2<Cplx<f64>>, dt: f64) -> BoundaryTrace<f64> {
    BoundaryTrace {
        values,
        quantity: Quantity::Control,
        dt,
        eta: None,
        alpha: None,
    }
}

/// θ* = sin(ωt), ω = π/(2T), satisfies both end conditions. The control
/// producing `h* = θ*'' − θ* = −(1+ω²)θ*` solves `g' − ikg = h*`, `g(0) = 0`:
/// `g = e^{ikt} ∫₀ᵗ e^{−iks} h*(s) ds` in closed form.
fn manufactured(k: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> Cplx<f64>) {
    let w = PI / (2.0 * T_FINAL);
    let theta = move |t: f64| (w * t).sin();
    let g = move |t: f64| {
        let i = Cplx::new(0.0, 1.0);
        let plus = ((i * (w - k) * t).exp() - 1.0) / (i * (w - k));
        let minus = ((-i * (w + k) * t).exp() - 1.0) / (-i * (w + k));
        let integral = (plus - minus) / (2.0 * i);
        (i * k * t).exp() * integral * (-(1.0 + w * w))
    };
    (theta, g)
}

#[test]
fn manufactured_theta_converges_at_second_order() {
    let k = 3.0;
    let (theta_star, g_star) = manufactured(k);
    let eta = FrequencySample::new([k, 0.0]).unwrap();
    let mut errors = Vec::new();
    let mut residuals = Vec::new();
    for nt in [100usize, 200, 400] {
        let dt = T_FINAL / nt as f64;
        let g = trace(Array2::from_shape_fn((nt + 1, 1), |(n, _)| g_star(n as f64 * dt)), dt);
        let th = theta_from_trace(&g, &eta).unwrap();
        let err = (0..=nt)
            .map(|n| (th.theta.values[[n, 0]] - theta_star(n as f64 * dt)).norm())
            .fold(0.0, f64::max);
        errors.push(err);
        let r = ode_residual(&th, &g);
        residuals.push((r.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt).sqrt());
    }
    for w in errors.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((p - 2.0).abs() < 0.3, "theta errors {errors:?}");
    }
    for w in residuals.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((p - 2.0).abs() < 0.3, "residuals {residuals:?}");
    }
}

/// The ODE only sees `g' − ikg`, so adding `Ce^{ikt}` to `g` leaves its θ
/// unchanged; the Volterra form evaluated at `t = T` reads `θ'(T) = g(T)` and
/// singles out the representative with `g(T) = 0`.
#[test]
fn volterra_reproduces_manufactured_theta() {
    let k = 3.0;
    let (theta_star, g_raw) = manufactured(k);
    let shift = -g_raw(T_FINAL) * Cplx::new(0.0, -k * T_FINAL).exp();
    let g_star = |t: f64| g_raw(t) + shift * Cplx::new(0.0, k * t).exp();
    let eta = FrequencySample::new([k, 0.0]).unwrap();
    let nt = 400;
    let dt = T_FINAL / nt as f64;
    let g = trace(Array2::from_shape_fn((nt + 1, 1), |(n, _)| g_star(n as f64 * dt)), dt);
    let th = solve_theta_volterra_trace(&g, &eta).unwrap();
    let err = (0..=nt)
        .map(|n| (th.theta.values[[n, 0]] - theta_star(n as f64 * dt)).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
    assert_eq!(th.theta.values[[0, 0]].norm(), 0.0);
    let ode = theta_from_trace(&g, &eta).unwrap();
    assert!(theta_rel_l2(&th, &ode) < 1e-3);
}

#[test]
fn ode_and_volterra_agree_on_certified_control() {
    let g = build_grid(&GridConfig::square(1.0, 32, T_FINAL)).unwrap();
    let c0 = RField::from_elem(g.shape(), 1.0);
    let p = BoundaryPartition::default_for(&g).unwrap();
    let beta = make_cutoff_beta(&g, &Region::centered_rect(1.0, 1.0, 0.25, 0.25), 0.125).unwrap();
    let eta = FrequencySample::new([2.0 * PI, PI]).unwrap();
    let ctl = solve_control(&eta, &beta, &g, &c0, &p, &HumConfig::default()).unwrap();
    assert!(ctl.certified);
    let ode = solve_theta_ode(&ctl).unwrap();
    let vol = solve_theta_volterra(&ctl).unwrap();
    assert!(theta_rel_l2(&vol, &ode) <= 0.01);
    // θ'(T) = g(T) = 0 is implied, not imposed, for the Volterra form.
    let scale = vol.theta_t.sup_norm();
    let last = g.nt();
    for k in 0..p.len() {
        assert!(vol.theta_t.values[[last, k]].norm() <= 1e-2 * scale);
        assert_eq!(ode.theta_t.values[[last, k]].norm(), 0.0);
    }
}

fn random_trace(seed: &[f64], n: usize, dt: f64) -> BoundaryTrace<f64> {
    trace(
        Array2::from_shape_fn((n, 2), |(i, k)| {
            let a = seed[(i + k) % seed.len()];
            Cplx::new((a * i as f64 * dt).sin(), (a * (k + 1) as f64 * i as f64 * dt).cos() - 1.0)
        }),
        dt,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn both_solvers_are_linear(s1 in prop::collection::vec(0.1f64..8.0, 3), s2 in prop::collection::vec(0.1f64..8.0, 3), a in -3.0f64..3.0) {
        let (n, dt) = (81, 0.05);
        let eta = FrequencySample::new([2.0, 1.0]).unwrap();
        let (g1, g2) = (random_trace(&s1, n, dt), random_trace(&s2, n, dt));
        let sum = trace(&g1.values * Cplx::new(a, 0.0) + &g2.values, dt);
        let ode = |g: &BoundaryTrace<f64>| theta_from_trace(g, &eta).unwrap().theta.values;
        let lhs = ode(&sum);
        let rhs = ode(&g1) * Cplx::new(a, 0.0) + ode(&g2);
        let scale = rhs.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((l - r).norm() <= 1e-8 * scale);
        }
        let vol = |g: &BoundaryTrace<f64>| solve_theta_volterra_trace(g, &eta).unwrap().theta.values;
        let lhs = vol(&sum);
        let rhs = vol(&g1) * Cplx::new(a, 0.0) + vol(&g2);
        let scale = rhs.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((l - r).norm() <= 1e-8 * scale);
        }
    }
}
