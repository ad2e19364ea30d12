//! Dirichlet null control on Γ by the Hilbert Uniqueness Method.
//!
//! The discrete control map `L` sends a boundary function on Γ × (0,T)
//! (multiplied by a fixed temporal taper) to the last two time levels of the
//! c₀-wave solution started from rest. Its exact transpose is a backward
//! leapfrog solve with homogeneous Dirichlet data whose trace on Γ is read
//! one cell inward, i.e. the adjoint Neumann trace. States are measured in
//! the discrete leapfrog energy `Q`, controls in `L²(Γ × (0,T))`, and the
//! minimal-norm control is found by conjugate gradients on the normal
//! equations, so the final energy decreases monotonically.

use ndarray::Array2;

use crate::domain::{BoundaryPartition, CField, CutoffField, FrequencySample, GridSpec, RField};
use crate::error::{Error, Result};
use crate::scalar::{czero, Cplx, Real};
use crate::wave::{
    discrete_energy, flat, flat_mut, solve_with_observer, BoundaryTrace, Dirichlet, Ivbp, Quantity, Stepper,
};

/// Solver settings for [`solve_control`].
#[derive(Clone, Debug, PartialEq)]
pub struct HumConfig<T> {
    /// Certification threshold on `E(T)/E(0)`.
    pub cg_tol: T,
    pub cg_max_iters: usize,
    /// Tychonoff weight, relative to the initial energy.
    pub epsilon: T,
    /// Smooth the state residual with one Jacobi pass before measuring it.
    pub filter: bool,
    /// Fraction of (0,T) over which the control is ramped at each end.
    pub taper_fraction: T,
}

impl<T: Real> Default for HumConfig<T> {
    fn default() -> Self {
        Self {
            cg_tol: T::lit(1e-3),
            cg_max_iters: 200,
            epsilon: T::lit(1e-6),
            filter: false,
            taper_fraction: T::lit(0.05),
        }
    }
}

impl<T: Real> HumConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.cg_tol > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "cg_tol",
                reason: "must be positive".into(),
            });
        }
        if !(self.epsilon >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: "must be non-negative".into(),
            });
        }
        if !(self.taper_fraction > T::zero() && self.taper_fraction < T::lit(0.5)) {
            return Err(Error::InvalidParameter {
                name: "taper_fraction",
                reason: "must lie in (0, 0.5)".into(),
            });
        }
        Ok(())
    }
}

/// Boundary control `g_η` together with its certification record.
#[derive(Clone, Debug)]
pub struct ControlFunction<T> {
    /// Dirichlet datum actually applied on Γ (taper included).
    pub g: BoundaryTrace<T>,
    pub eta: FrequencySample<T>,
    /// Achieved `E(T)/E(0)`.
    pub residual_energy: T,
    pub iterations: usize,
    /// Absolute Tychonoff weight used by the solve.
    pub regularization: T,
    pub certified: bool,
    pub initial_energy: T,
    /// `E(T)/E(0)` after every iteration.
    pub residual_history: Vec<T>,
}

/// Last two time levels on interior nodes (boundary entries are zero).
#[derive(Clone, Debug, PartialEq)]
pub struct FinalState<T> {
    pub penultimate: CField<T>,
    pub last: CField<T>,
}

impl<T: Real> FinalState<T> {
    pub fn zeros(grid: &GridSpec<T>) -> Self {
        Self {
            penultimate: CField::from_elem(grid.shape(), czero()),
            last: CField::from_elem(grid.shape(), czero()),
        }
    }

    fn axpy(&mut self, a: Cplx<T>, x: &Self) {
        self.penultimate.zip_mut_with(&x.penultimate, |s, &v| *s += v * a);
        self.last.zip_mut_with(&x.last, |s, &v| *s += v * a);
    }

    fn scaled(&self, a: T) -> Self {
        Self {
            penultimate: self.penultimate.mapv(|v| v * a),
            last: self.last.mapv(|v| v * a),
        }
    }

    /// Euclidean pairing `Σ conj(self)·other`.
    fn dot(&self, other: &Self) -> Cplx<T> {
        let mut acc = czero();
        for (a, b) in self.penultimate.iter().zip(other.penultimate.iter()) {
            acc += a.conj() * b;
        }
        for (a, b) in self.last.iter().zip(other.last.iter()) {
            acc += a.conj() * b;
        }
        acc
    }
}

/// Temporal taper vanishing on the first level and the last two levels, with
/// a C¹ cubic ramp over `fraction·T` at each end.
pub fn control_taper<T: Real>(grid: &GridSpec<T>, fraction: T) -> Vec<T> {
    let nt = grid.nt();
    let dt = grid.dt();
    let t_final = grid.t_final();
    let width = fraction * t_final - dt;
    let ramp = |s: T| {
        if s <= T::zero() {
            T::zero()
        } else if s >= T::one() {
            T::one()
        } else {
            s * s * (T::lit(3.0) - T::lit(2.0) * s)
        }
    };
    (0..=nt)
        .map(|n| {
            if n == 0 || n + 1 >= nt {
                return T::zero();
            }
            if width <= T::zero() {
                return T::one();
            }
            let t = grid.time(n);
            let head = ramp((t - dt) / width);
            let tail = ramp((t_final - dt - t) / width);
            head.min(tail)
        })
        .collect()
}

/// The discrete control-to-final-state map and everything needed to run HUM.
pub struct HumSystem<'a, T> {
    grid: &'a GridSpec<T>,
    c0: &'a RField<T>,
    partition: &'a BoundaryPartition<T>,
    stepper: Stepper<T>,
    taper: Vec<T>,
    filter: bool,
}

impl<'a, T: Real> HumSystem<'a, T> {
    pub fn new(
        grid: &'a GridSpec<T>,
        c0: &'a RField<T>,
        partition: &'a BoundaryPartition<T>,
        taper_fraction: T,
        filter: bool,
    ) -> Result<Self> {
        grid.check_shape("c0", c0)?;
        grid.check_cfl(c0.iter().copied().fold(T::infinity(), T::min))?;
        if grid.nt() < 3 {
            return Err(Error::InvalidParameter {
                name: "nt",
                reason: "control problems need at least three time steps".into(),
            });
        }
        Ok(Self {
            grid,
            c0,
            partition,
            stepper: Stepper::new(grid, c0),
            taper: control_taper(grid, taper_fraction),
            filter,
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.grid
    }
    pub fn taper(&self) -> &[T] {
        &self.taper
    }

    fn control_shape(&self) -> (usize, usize) {
        (self.grid.nt() + 1, self.partition.len())
    }

    fn set_gamma(&self, level: &mut CField<T>, raw: &Array2<Cplx<T>>, n: usize) {
        let tau = self.taper[n];
        for (s, v) in self.partition.samples().iter().zip(raw.row(n).iter()) {
            level[[s.i, s.j]] = *v * tau;
        }
    }

    /// Applied Dirichlet datum `τ(t)·raw` as a trace.
    pub fn applied(&self, raw: &Array2<Cplx<T>>) -> Array2<Cplx<T>> {
        let mut out = raw.clone();
        for (n, mut row) in out.outer_iter_mut().enumerate() {
            let tau = self.taper[n];
            row.mapv_inplace(|v| v * tau);
        }
        out
    }

    /// `L raw`: final levels of the solution from rest with datum `τ·raw` on Γ.
    pub fn forward(&self, raw: &Array2<Cplx<T>>) -> FinalState<T> {
        let grid = self.grid;
        let nt = grid.nt();
        let shape = grid.shape();
        let mut prev = CField::from_elem(shape, czero());
        self.set_gamma(&mut prev, raw, 0);
        let zero = CField::from_elem(shape, czero());
        let mut curr = CField::from_elem(shape, czero());
        self.stepper
            .start(grid.dt(), flat(&prev), flat(&zero), flat_mut(&mut curr), None);
        // `start` adds φ on the interior, which is zero here.
        self.set_gamma(&mut curr, raw, 1);
        let mut next = CField::from_elem(shape, czero());
        for n in 1..nt {
            self.stepper.leapfrog(flat(&prev), flat(&curr), flat_mut(&mut next), None);
            self.set_gamma(&mut next, raw, n + 1);
            std::mem::swap(&mut prev, &mut curr);
            std::mem::swap(&mut curr, &mut next);
        }
        let mut out = FinalState {
            penultimate: prev,
            last: curr,
        };
        zero_boundary(grid, &mut out.penultimate);
        zero_boundary(grid, &mut out.last);
        out
    }

    /// Exact transpose of [`Self::forward`]: backward leapfrog with homogeneous
    /// Dirichlet data, read one cell inside Γ.
    pub fn transpose(&self, dual: &FinalState<T>) -> Array2<Cplx<T>> {
        let grid = self.grid;
        let nt = grid.nt();
        let shape = grid.shape();
        let w = |k: usize| self.stepper.weight(k);
        let mut curr = dual.last.clone();
        let mut prev = dual.penultimate.clone();
        for (k, v) in flat_mut(&mut curr).iter_mut().enumerate() {
            *v = *v * w(k);
        }
        for (k, v) in flat_mut(&mut prev).iter_mut().enumerate() {
            *v = -(*v * w(k));
        }
        zero_boundary(grid, &mut curr);
        zero_boundary(grid, &mut prev);

        let mut grad = Array2::from_elem(self.control_shape(), czero());
        // curr holds b^{N}; the datum at level N−1 sees it.
        self.gather(&curr, &mut grad, nt - 1, T::one());
        let mut next = CField::from_elem(shape, czero());
        for k in (1..nt).rev() {
            self.stepper.leapfrog(flat(&prev), flat(&curr), flat_mut(&mut next), None);
            let scale = if k == 1 { T::lit(0.5) } else { T::one() };
            self.gather(&next, &mut grad, k - 1, scale);
            std::mem::swap(&mut prev, &mut curr);
            std::mem::swap(&mut curr, &mut next);
        }
        for (n, mut row) in grad.outer_iter_mut().enumerate() {
            let tau = self.taper[n];
            row.mapv_inplace(|v| v * tau);
        }
        grad
    }

    fn gather(&self, b: &CField<T>, grad: &mut Array2<Cplx<T>>, n: usize, scale: T) {
        for (col, s) in self.partition.samples().iter().enumerate() {
            let h = s.normal_spacing(self.grid);
            let (i1, j1) = s.inward(1);
            grad[[n, col]] = b[[i1, j1]] * (scale / (h * h));
        }
    }

    /// `Q x`, the Gram operator of the staggered energy on the final levels.
    pub fn energy_apply(&self, x: &FinalState<T>) -> FinalState<T> {
        let grid = self.grid;
        let area = grid.cell_area();
        let idt2 = T::one() / (grid.dt() * grid.dt());
        let half = T::lit(0.5);
        let mut qa = CField::from_elem(grid.shape(), czero());
        let mut qb = CField::from_elem(grid.shape(), czero());
        let a = flat(&x.penultimate);
        let b = flat(&x.last);
        let stride = self.stepper.stride();
        {
            let qa = flat_mut(&mut qa);
            let qb = flat_mut(&mut qb);
            for i in 1..grid.nx() {
                for k in i * stride + 1..i * stride + grid.ny() {
                    let c = flat(self.c0)[k];
                    let kin = (a[k] - b[k]) * (c * idt2);
                    qa[k] = (kin - self.stepper.lap(b, k) * half) * area;
                    qb[k] = (-kin - self.stepper.lap(a, k) * half) * area;
                }
            }
        }
        FinalState {
            penultimate: qa,
            last: qb,
        }
    }

    /// Discrete energy `⟨x, Qx⟩` of a final state.
    pub fn energy(&self, x: &FinalState<T>) -> T {
        x.dot(&self.energy_apply(x)).re
    }

    fn smooth(&self, x: &FinalState<T>) -> FinalState<T> {
        let f = |u: &CField<T>| {
            let mut out = CField::from_elem(u.dim(), czero());
            let (eighth, half) = (T::lit(0.125), T::lit(0.5));
            for i in 1..self.grid.nx() {
                for j in 1..self.grid.ny() {
                    out[[i, j]] = u[[i, j]] * half
                        + (u[[i + 1, j]] + u[[i - 1, j]] + u[[i, j + 1]] + u[[i, j - 1]]) * eighth;
                }
            }
            out
        };
        FinalState {
            penultimate: f(&x.penultimate),
            last: f(&x.last),
        }
    }

    /// Metric on states used by the solver: `Q`, or `SQS` with the smoothing
    /// filter `S`.
    fn metric_apply(&self, x: &FinalState<T>) -> FinalState<T> {
        if self.filter {
            self.smooth(&self.energy_apply(&self.smooth(x)))
        } else {
            self.energy_apply(x)
        }
    }

    fn control_weight(&self, col: usize) -> T {
        self.partition.samples()[col].weight * self.grid.dt()
    }

    /// `⟨r, s⟩` in L²(Γ × (0,T)).
    pub fn control_inner(&self, r: &Array2<Cplx<T>>, s: &Array2<Cplx<T>>) -> Cplx<T> {
        let mut acc = czero();
        for row in 0..r.dim().0 {
            for col in 0..r.dim().1 {
                acc += r[[row, col]].conj() * s[[row, col]] * self.control_weight(col);
            }
        }
        acc
    }

    /// State inner product matching the solver metric.
    pub fn state_inner(&self, x: &FinalState<T>, y: &FinalState<T>) -> Cplx<T> {
        x.dot(&self.metric_apply(y))
    }

    /// Adjoint `L*` of the control map between the weighted spaces.
    pub fn adjoint(&self, x: &FinalState<T>) -> Array2<Cplx<T>> {
        let mut r = self.transpose(&self.metric_apply(x));
        for mut row in r.outer_iter_mut() {
            for (col, v) in row.iter_mut().enumerate() {
                *v = *v / self.control_weight(col);
            }
        }
        r
    }
}

fn zero_boundary<T: Real>(grid: &GridSpec<T>, f: &mut CField<T>) {
    for (i, j) in grid.boundary_nodes() {
        f[[i, j]] = czero();
    }
}

/// HUM operator on adjoint final data: `x ↦ L L* x + ε x`. Symmetric and
/// positive semidefinite in the state metric of `system`.
pub fn hum_operator_apply<T: Real>(system: &HumSystem<'_, T>, x: &FinalState<T>, epsilon: T) -> FinalState<T> {
    let mut out = system.forward(&system.adjoint(x));
    out.axpy(Cplx::new(epsilon, T::zero()), x);
    out
}

/// Free evolution of `(βe^{iη·x}, 0)` with homogeneous Dirichlet data.
fn free_final_state<T: Real>(
    grid: &GridSpec<T>,
    c0: &RField<T>,
    phi: &CField<T>,
) -> Result<(FinalState<T>, T)> {
    let zero = CField::from_elem(grid.shape(), czero());
    let problem = Ivbp {
        c: c0,
        phi,
        psi: &zero,
        dirichlet: Dirichlet::Zero,
        source: None,
    };
    let nt = grid.nt();
    let mut first = zero.clone();
    let mut e0 = T::zero();
    let mut state = FinalState::zeros(grid);
    solve_with_observer(grid, &problem, &mut |n, level| {
        if n == 0 {
            first.assign(level);
        }
        if n == 1 {
            e0 = discrete_energy(grid, c0, &first, level);
        }
        if n + 1 == nt {
            state.penultimate.assign(level);
        }
        if n == nt {
            state.last.assign(level);
        }
    })?;
    zero_boundary(grid, &mut state.penultimate);
    zero_boundary(grid, &mut state.last);
    Ok((state, e0))
}

fn cutoff_plane_wave<T: Real>(grid: &GridSpec<T>, eta: &FrequencySample<T>, beta: &CutoffField<T>) -> Result<CField<T>> {
    grid.check_shape("beta", &beta.beta)?;
    Ok(ndarray::Zip::from(&grid.complex_field(|x, y| eta.phi(x, y)))
        .and(&beta.beta)
        .map_collect(|&p, &b| p * b))
}

/// Minimal-norm null control for the initial state `(βe^{iη·x}, 0)`.
///
/// CG stagnation is not an error: the returned control then carries
/// `certified == false` and its achieved residual energy.
pub fn solve_control<T: Real>(
    eta: &FrequencySample<T>,
    beta: &CutoffField<T>,
    grid: &GridSpec<T>,
    c0: &RField<T>,
    partition: &BoundaryPartition<T>,
    cfg: &HumConfig<T>,
) -> Result<ControlFunction<T>> {
    cfg.validate()?;
    let system = HumSystem::new(grid, c0, partition, cfg.taper_fraction, cfg.filter)?;
    let w0 = cutoff_plane_wave(grid, eta, beta)?;
    let (free, e0) = free_final_state(grid, c0, &w0)?;

    let mut g = BoundaryTrace::for_grid(grid, partition, Quantity::Control);
    g.eta = Some(eta.eta());
    if e0 <= T::zero() {
        return Ok(ControlFunction {
            g,
            eta: *eta,
            residual_energy: T::zero(),
            iterations: 0,
            regularization: T::zero(),
            certified: true,
            initial_energy: T::zero(),
            residual_history: Vec::new(),
        });
    }

    let eps = cfg.epsilon * e0;
    let (x, history, certified) = cgls(&system, &free, e0, eps, cfg);
    let residual_energy = history.last().copied().unwrap_or(T::one());
    g.values = system.applied(&x);
    Ok(ControlFunction {
        g,
        eta: *eta,
        residual_energy,
        iterations: history.len(),
        regularization: eps,
        certified,
        initial_energy: e0,
        residual_history: history,
    })
}

/// Conjugate gradients on `(L*L + ε) r = −L* s`, tracking `E(T)/E(0)` of the
/// true residual `L r + s`.
fn cgls<T: Real>(
    system: &HumSystem<'_, T>,
    free: &FinalState<T>,
    e0: T,
    eps: T,
    cfg: &HumConfig<T>,
) -> (Array2<Cplx<T>>, Vec<T>, bool) {
    let shape = system.control_shape();
    let mut x = Array2::from_elem(shape, czero());
    // res = −s − L x
    let mut res = free.scaled(-T::one());
    let mut s = system.adjoint(&res);
    let mut p = s.clone();
    let mut gamma = system.control_inner(&s, &s).re;
    let mut history = Vec::new();
    let mut certified = false;

    for _ in 0..cfg.cg_max_iters {
        if gamma <= T::zero() {
            break;
        }
        let q = system.forward(&p);
        let delta = system.state_inner(&q, &q).re + eps * system.control_inner(&p, &p).re;
        if !(delta > T::zero()) {
            break;
        }
        let step = gamma / delta;
        x.zip_mut_with(&p, |xi, &pi| *xi += pi * step);
        res.axpy(Cplx::new(-step, T::zero()), &q);
        let ratio = system.energy(&res) / e0;
        history.push(ratio);
        if ratio <= cfg.cg_tol {
            certified = true;
            break;
        }
        s = system.adjoint(&res);
        s.zip_mut_with(&x, |si, &xi| *si -= xi * eps);
        let gamma_new = system.control_inner(&s, &s).re;
        let beta = gamma_new / gamma;
        p.zip_mut_with(&s, |pi, &si| *pi = si + *pi * beta);
        gamma = gamma_new;
    }
    (x, history, certified)
}

/// Re-solves the controlled problem with `g` as Dirichlet datum on Γ (zero on
/// Γ_c) and returns `E(T)/E(0)`; zero when the initial energy vanishes.
pub fn verify_null_control<T: Real>(
    control: &ControlFunction<T>,
    beta: &CutoffField<T>,
    grid: &GridSpec<T>,
    c0: &RField<T>,
    partition: &BoundaryPartition<T>,
) -> Result<T> {
    control.g.check_against(grid, partition)?;
    let w0 = cutoff_plane_wave(grid, &control.eta, beta)?;
    let zero = CField::from_elem(grid.shape(), czero());
    let problem = Ivbp {
        c: c0,
        phi: &w0,
        psi: &zero,
        dirichlet: Dirichlet::Gamma {
            partition,
            values: control.g.values.view(),
        },
        source: None,
    };
    let nt = grid.nt();
    let mut first = zero.clone();
    let mut e0 = T::zero();
    let mut pen = zero.clone();
    let mut e_final = T::zero();
    solve_with_observer(grid, &problem, &mut |n, level| {
        if n == 0 {
            first.assign(level);
        }
        if n == 1 {
            e0 = discrete_energy(grid, c0, &first, level);
        }
        if n + 1 == nt {
            pen.assign(level);
        }
        if n == nt {
            e_final = discrete_energy(grid, c0, &pen, level);
        }
    })?;
    if e0 <= T::zero() {
        return Ok(T::zero());
    }
    Ok(e_final / e0)
}
