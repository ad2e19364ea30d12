use std::f64::consts::PI;

use proptest::prelude::*;
use wavecip::domain::{build_grid, make_cutoff_beta, BoundaryPartition, CField, CutoffField, FrequencySample, GridConfig, GridSpec, RField, Region, Side};
use wavecip::hum::{hum_operator_apply, solve_control, verify_null_control, FinalState, HumConfig, HumSystem};
use wavecip::Cplx;

struct Setup {
    grid: GridSpec<f64>,
    c0: RField<f64>,
    partition: BoundaryPartition<f64>,
    beta: CutoffField<f64>,
}

fn setup(n: usize, t: f64) -> Setup {
    let grid = build_grid(&GridConfig::square(1.0, n, t)).unwrap();
    let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
    Setup {
        c0: RField::from_elem(grid.shape(), 1.0),
        partition: BoundaryPartition::default_for(&grid).unwrap(),
        beta: make_cutoff_beta(&grid, &op, 0.125).unwrap(),
        grid,
    }
}

#[test]
fn default_grid_control_is_certified_and_reproducible() {
    let s = setup(64, 4.0);
    let eta = FrequencySample::new([2.0 * PI, 0.0]).unwrap();
    let ctl = solve_control(&eta, &s.beta, &s.grid, &s.c0, &s.partition, &HumConfig::default()).unwrap();
    assert!(ctl.certified, "residual {}", ctl.residual_energy);
    assert!(ctl.residual_energy <= 1e-3);
    let check = verify_null_control(&ctl, &s.beta, &s.grid, &s.c0, &s.partition).unwrap();
    assert!((check - ctl.residual_energy).abs() <= 0.1 * ctl.residual_energy, "{check} vs {}", ctl.residual_energy);
    for w in ctl.residual_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn longer_horizon_does_not_hurt_at_equal_iterations() {
    let eta = FrequencySample::new([2.0 * PI, 0.0]).unwrap();
    let cfg = HumConfig {
        cg_tol: 1e-12,
        cg_max_iters: 15,
        ..HumConfig::default()
    };
    let res = |t: f64| {
        let s = setup(32, t);
        solve_control(&eta, &s.beta, &s.grid, &s.c0, &s.partition, &cfg).unwrap().residual_energy
    };
    let (short, long) = (res(2.0), res(4.0));
    assert!(long <= short, "T=4: {long}, T=2: {short}");
}

#[test]
fn single_side_stagnates() {
    let mut s = setup(24, 4.0);
    s.partition = BoundaryPartition::new(&s.grid, &[Side::Right]).unwrap();
    assert!(!s.partition.presumed_geometric_control(&s.grid, 1.0));
    let eta = FrequencySample::new([0.0, 2.0 * PI]).unwrap();
    let cfg = HumConfig {
        cg_max_iters: 60,
        ..HumConfig::default()
    };
    let ctl = solve_control(&eta, &s.beta, &s.grid, &s.c0, &s.partition, &cfg).unwrap();
    assert!(!ctl.certified, "residual {}", ctl.residual_energy);
    assert_eq!(ctl.iterations, 60);
}

fn state_from(g: &GridSpec<f64>, seed: &[f64]) -> FinalState<f64> {
    let mut k = 0usize;
    let mut f = |shift: f64| {
        let mut a = CField::from_shape_fn(g.shape(), |_| {
            k += 1;
            let s = seed[k % seed.len()] + shift;
            Cplx::new((s * k as f64).sin(), (s * 0.37 * k as f64).cos())
        });
        for (i, j) in g.boundary_nodes() {
            a[[i, j]] = Cplx::new(0.0, 0.0);
        }
        a
    };
    FinalState {
        penultimate: f(0.0),
        last: f(0.5),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hum_operator_is_symmetric_and_nonnegative(
        seed in prop::collection::vec(0.1f64..5.0, 3),
        seed2 in prop::collection::vec(0.1f64..5.0, 3),
        filter in any::<bool>(),
        eps in 0.0f64..1e-3,
    ) {
        let s = setup(10, 2.0);
        let sys = HumSystem::new(&s.grid, &s.c0, &s.partition, 0.05, filter).unwrap();
        let x = state_from(&s.grid, &seed);
        let y = state_from(&s.grid, &seed2);
        let axy = sys.state_inner(&hum_operator_apply(&sys, &x, eps), &y);
        let xay = sys.state_inner(&x, &hum_operator_apply(&sys, &y, eps));
        prop_assert!((axy - xay).norm() <= 1e-6 * axy.norm().max(1e-300));
        let q = sys.state_inner(&x, &hum_operator_apply(&sys, &x, eps));
        prop_assert!(q.re >= 0.0);
        prop_assert!(q.im.abs() <= 1e-8 * q.re.max(1e-300));
    }
}
