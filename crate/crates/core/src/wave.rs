//! Explicit leapfrog solver for `c ∂ₜ²u = Δu + s` on the rectangle with
//! Dirichlet data, Neumann-trace extraction on Γ and the local
//! Dirichlet-to-Neumann maps built on top of it.

use ndarray::{Array2, Array3, ArrayView2};

use crate::domain::{BoundaryPartition, CField, CoefficientField, FrequencySample, GridSpec, RField};
use crate::error::{Error, Result};
use crate::scalar::{czero, Cplx, Real};

/// Interior forcing `s(x, y, t)`.
pub type Source<'a, T> = &'a (dyn Fn(T, T, T) -> Cplx<T> + Sync);

/// Dirichlet datum on ∂Ω × (0, T).
#[derive(Clone, Copy)]
pub enum Dirichlet<'a, T> {
    /// Homogeneous condition.
    Zero,
    /// Closed-form datum `f(x, y, t)` on every boundary node.
    Analytic(&'a (dyn Fn(T, T, T) -> Cplx<T> + Sync)),
    /// Sampled datum on Γ (`values[[step, sample]]`), zero on Γ_c.
    Gamma {
        partition: &'a BoundaryPartition<T>,
        values: ArrayView2<'a, Cplx<T>>,
    },
}

/// Which initial-boundary value problem produced a movie.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcFamily {
    /// Plane-wave data with c = c₀ + αc₁.
    Perturbed,
    /// Plane-wave data with c = c₀.
    Background,
    /// Cutoff initial state driven by a control on Γ.
    Controlled,
    /// Zero data except the initial velocity built from c₁.
    Auxiliary,
    Generic,
}

/// Tag describing what a trace or field holds; persisted in containers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantity {
    Neumann,
    DtnDifference,
    Control,
    Theta,
    ThetaT,
    AuxNeumann,
    Field,
    Movie,
}

impl Quantity {
    pub fn tag(self) -> &'static str {
        match self {
            Quantity::Neumann => "neumann",
            Quantity::DtnDifference => "dtn_diff",
            Quantity::Control => "control",
            Quantity::Theta => "theta",
            Quantity::ThetaT => "theta_t",
            Quantity::AuxNeumann => "aux_neumann",
            Quantity::Field => "field",
            Quantity::Movie => "movie",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "neumann" => Quantity::Neumann,
            "dtn_diff" => Quantity::DtnDifference,
            "control" => Quantity::Control,
            "theta" => Quantity::Theta,
            "theta_t" => Quantity::ThetaT,
            "aux_neumann" => Quantity::AuxNeumann,
            "field" => Quantity::Field,
            "movie" => Quantity::Movie,
            _ => return None,
        })
    }
}

/// Complex function of (time step, Γ sample).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace<T> {
    pub values: Array2<Cplx<T>>,
    pub quantity: Quantity,
    pub dt: T,
    pub eta: Option<[T; 2]>,
    pub alpha: Option<T>,
}

impl<T: Real> BoundaryTrace<T> {
    pub fn zeros(steps: usize, samples: usize, dt: T, quantity: Quantity) -> Self {
        Self {
            values: Array2::from_elem((steps, samples), czero()),
            quantity,
            dt,
            eta: None,
            alpha: None,
        }
    }

    pub fn for_grid(grid: &GridSpec<T>, partition: &BoundaryPartition<T>, quantity: Quantity) -> Self {
        Self::zeros(grid.nt() + 1, partition.len(), grid.dt(), quantity)
    }

    pub fn steps(&self) -> usize {
        self.values.dim().0
    }
    pub fn samples(&self) -> usize {
        self.values.dim().1
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// L²(Γ × (0,T)) norm with trapezoid weights in time.
    pub fn l2_norm(&self, partition: &BoundaryPartition<T>) -> T {
        let n = self.steps();
        let mut acc = T::zero();
        for (step, row) in self.values.outer_iter().enumerate() {
            let wt = trapezoid_weight::<T>(step, n) * self.dt;
            for (v, s) in row.iter().zip(partition.samples()) {
                acc += wt * s.weight * v.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `self − other` keeping the metadata of `self`.
    pub fn difference(&self, other: &Self, quantity: Quantity) -> Result<Self> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::Shape {
                what: "trace difference",
                expected: vec![self.steps(), self.samples()],
                got: vec![other.steps(), other.samples()],
            });
        }
        Ok(Self {
            values: &self.values - &other.values,
            quantity,
            ..self.clone()
        })
    }

    pub fn conj(&self) -> Self {
        Self {
            values: self.values.mapv(|v| v.conj()),
            ..self.clone()
        }
    }

    pub(crate) fn check_against(&self, grid: &GridSpec<T>, partition: &BoundaryPartition<T>) -> Result<()> {
        if self.values.dim() != (grid.nt() + 1, partition.len()) {
            return Err(Error::Shape {
                what: "boundary trace",
                expected: vec![grid.nt() + 1, partition.len()],
                got: vec![self.steps(), self.samples()],
            });
        }
        Ok(())
    }
}

pub(crate) fn trapezoid_weight<T: Real>(k: usize, n: usize) -> T {
    if k == 0 || k + 1 == n {
        T::lit(0.5)
    } else {
        T::one()
    }
}

/// Space-time solution, `values[[step, ix, iy]]`.
#[derive(Clone, Debug)]
pub struct WaveMovie<T> {
    pub values: Array3<Cplx<T>>,
    pub grid: GridSpec<T>,
    pub family: BcFamily,
}

impl<T: Real> WaveMovie<T> {
    pub fn level(&self, n: usize) -> ArrayView2<'_, Cplx<T>> {
        self.values.index_axis(ndarray::Axis(0), n)
    }
}

/// Data of one initial-boundary value problem.
#[derive(Clone, Copy)]
pub struct Ivbp<'a, T> {
    pub c: &'a RField<T>,
    pub phi: &'a CField<T>,
    pub psi: &'a CField<T>,
    pub dirichlet: Dirichlet<'a, T>,
    pub source: Option<Source<'a, T>>,
}

/// Five-point leapfrog update on contiguous node arrays.
pub(crate) struct Stepper<T> {
    nx: usize,
    ny: usize,
    stride: usize,
    /// dt²/c at every node.
    weight: Vec<T>,
    ihx2: T,
    ihy2: T,
}

impl<T: Real> Stepper<T> {
    pub(crate) fn new(grid: &GridSpec<T>, c: &RField<T>) -> Self {
        let dt2 = grid.dt() * grid.dt();
        Self {
            nx: grid.nx(),
            ny: grid.ny(),
            stride: grid.ny() + 1,
            weight: c.iter().map(|&v| dt2 / v).collect(),
            ihx2: T::one() / (grid.hx() * grid.hx()),
            ihy2: T::one() / (grid.hy() * grid.hy()),
        }
    }

    #[inline]
    pub(crate) fn lap(&self, u: &[Cplx<T>], k: usize) -> Cplx<T> {
        let two = T::lit(2.0);
        let c = u[k];
        (u[k + self.stride] + u[k - self.stride] - c * two) * self.ihx2
            + (u[k + 1] + u[k - 1] - c * two) * self.ihy2
    }

    /// `next = 2·curr − prev + (dt²/c)(Δcurr + src)` on interior nodes.
    pub(crate) fn leapfrog(
        &self,
        prev: &[Cplx<T>],
        curr: &[Cplx<T>],
        next: &mut [Cplx<T>],
        src: Option<&[Cplx<T>]>,
    ) {
        let two = T::lit(2.0);
        for i in 1..self.nx {
            let row = i * self.stride;
            for k in row + 1..row + self.ny {
                let mut acc = self.lap(curr, k);
                if let Some(s) = src {
                    acc += s[k];
                }
                next[k] = curr[k] * two - prev[k] + acc * self.weight[k];
            }
        }
    }

    /// Taylor start `u¹ = φ + dt·ψ + ½(dt²/c)(Δφ + s₀)` on interior nodes.
    pub(crate) fn start(
        &self,
        dt: T,
        phi: &[Cplx<T>],
        psi: &[Cplx<T>],
        next: &mut [Cplx<T>],
        src: Option<&[Cplx<T>]>,
    ) {
        let half = T::lit(0.5);
        for i in 1..self.nx {
            let row = i * self.stride;
            for k in row + 1..row + self.ny {
                let mut acc = self.lap(phi, k);
                if let Some(s) = src {
                    acc += s[k];
                }
                next[k] = phi[k] + psi[k] * dt + acc * (self.weight[k] * half);
            }
        }
    }

    pub(crate) fn weight(&self, k: usize) -> T {
        self.weight[k]
    }
    pub(crate) fn stride(&self) -> usize {
        self.stride
    }
}

pub(crate) fn flat<T>(a: &Array2<T>) -> &[T] {
    a.as_slice().expect("standard layout")
}
pub(crate) fn flat_mut<T>(a: &mut Array2<T>) -> &mut [T] {
    a.as_slice_mut().expect("standard layout")
}

fn apply_dirichlet<T: Real>(
    grid: &GridSpec<T>,
    bnodes: &[(usize, usize)],
    dirichlet: &Dirichlet<'_, T>,
    n: usize,
    level: &mut CField<T>,
) {
    let t = grid.time(n);
    match dirichlet {
        Dirichlet::Zero => {
            for &(i, j) in bnodes {
                level[[i, j]] = czero();
            }
        }
        Dirichlet::Analytic(f) => {
            for &(i, j) in bnodes {
                level[[i, j]] = f(grid.x(i), grid.y(j), t);
            }
        }
        Dirichlet::Gamma { partition, values } => {
            for &(i, j) in bnodes {
                level[[i, j]] = czero();
            }
            for (s, v) in partition.samples().iter().zip(values.row(n).iter()) {
                level[[s.i, s.j]] = *v;
            }
        }
    }
}

fn fill_source<T: Real>(grid: &GridSpec<T>, src: Source<'_, T>, t: T, out: &mut CField<T>) {
    for ((i, j), v) in out.indexed_iter_mut() {
        *v = if grid.is_boundary(i, j) {
            czero()
        } else {
            src(grid.x(i), grid.y(j), t)
        };
    }
}

fn validate<T: Real>(grid: &GridSpec<T>, p: &Ivbp<'_, T>) -> Result<()> {
    grid.check_shape("coefficient", p.c)?;
    grid.check_shape("initial value", p.phi)?;
    grid.check_shape("initial velocity", p.psi)?;
    let c_min = p.c.iter().copied().fold(T::infinity(), T::min);
    grid.check_cfl(c_min)?;
    if let Dirichlet::Gamma { partition, values } = &p.dirichlet {
        if values.dim() != (grid.nt() + 1, partition.len()) {
            return Err(Error::Shape {
                what: "Dirichlet trace",
                expected: vec![grid.nt() + 1, partition.len()],
                got: vec![values.dim().0, values.dim().1],
            });
        }
    }
    // Compatibility f(·, 0) = φ on ∂Ω.
    let bnodes = grid.boundary_nodes();
    let mut level0 = p.phi.clone();
    apply_dirichlet(grid, &bnodes, &p.dirichlet, 0, &mut level0);
    let scale = p.phi.iter().map(|v| v.norm()).fold(T::one(), T::max);
    let mismatch = bnodes
        .iter()
        .map(|&(i, j)| (level0[[i, j]] - p.phi[[i, j]]).norm())
        .fold(T::zero(), T::max);
    if mismatch > T::lit(1e-8) * scale {
        return Err(Error::IncompatibleData {
            mismatch: mismatch.as_f64(),
        });
    }
    Ok(())
}

/// Marches the leapfrog scheme from t = 0 to T, calling `observer(n, uⁿ)` for
/// every level. Only three levels are held in memory.
pub fn solve_with_observer<T: Real>(
    grid: &GridSpec<T>,
    problem: &Ivbp<'_, T>,
    observer: &mut dyn FnMut(usize, &CField<T>),
) -> Result<()> {
    validate(grid, problem)?;
    let stepper = Stepper::new(grid, problem.c);
    let bnodes = grid.boundary_nodes();

    let mut src = problem.source.map(|_| CField::from_elem(grid.shape(), czero()));
    let mut prev = problem.phi.clone();
    apply_dirichlet(grid, &bnodes, &problem.dirichlet, 0, &mut prev);
    if let (Some(s), Some(buf)) = (problem.source, src.as_mut()) {
        fill_source(grid, s, T::zero(), buf);
    }
    let mut curr = CField::from_elem(grid.shape(), czero());
    stepper.start(
        grid.dt(),
        flat(&prev),
        flat(problem.psi),
        flat_mut(&mut curr),
        src.as_ref().map(flat),
    );
    apply_dirichlet(grid, &bnodes, &problem.dirichlet, 1, &mut curr);
    observer(0, &prev);
    observer(1, &curr);

    let mut next = CField::from_elem(grid.shape(), czero());
    for n in 1..grid.nt() {
        if let (Some(s), Some(buf)) = (problem.source, src.as_mut()) {
            fill_source(grid, s, grid.time(n), buf);
        }
        stepper.leapfrog(flat(&prev), flat(&curr), flat_mut(&mut next), src.as_ref().map(flat));
        apply_dirichlet(grid, &bnodes, &problem.dirichlet, n + 1, &mut next);
        observer(n + 1, &next);
        std::mem::swap(&mut prev, &mut curr);
        std::mem::swap(&mut curr, &mut next);
    }
    Ok(())
}

/// Solves the problem and stores every time level.
pub fn solve_ivbp<T: Real>(grid: &GridSpec<T>, problem: &Ivbp<'_, T>, family: BcFamily) -> Result<WaveMovie<T>> {
    let (a, b) = grid.shape();
    let mut values = Array3::from_elem((grid.nt() + 1, a, b), czero());
    solve_with_observer(grid, problem, &mut |n, level| {
        values.index_axis_mut(ndarray::Axis(0), n).assign(level);
    })?;
    Ok(WaveMovie {
        values,
        grid: grid.clone(),
        family,
    })
}

/// Output of a streamed solve: the Γ Neumann trace and the last two levels.
#[derive(Clone, Debug)]
pub struct TracedSolution<T> {
    pub trace: BoundaryTrace<T>,
    pub penultimate: CField<T>,
    pub last: CField<T>,
    /// Discrete energy of the first staggered level, E^{1/2}.
    pub initial_energy: T,
}

/// Solves the problem recording only the Neumann trace on Γ.
pub fn solve_traced<T: Real>(
    grid: &GridSpec<T>,
    problem: &Ivbp<'_, T>,
    partition: &BoundaryPartition<T>,
) -> Result<TracedSolution<T>> {
    let mut trace = BoundaryTrace::for_grid(grid, partition, Quantity::Neumann);
    let mut first: Option<CField<T>> = None;
    let mut initial_energy = T::zero();
    let mut penultimate = CField::from_elem(grid.shape(), czero());
    let mut last = CField::from_elem(grid.shape(), czero());
    let nt = grid.nt();
    solve_with_observer(grid, problem, &mut |n, level| {
        neumann_of_level(grid, level.view(), partition, trace.values.row_mut(n).as_slice_mut().unwrap());
        if n == 0 {
            first = Some(level.clone());
        } else if n == 1 {
            initial_energy = discrete_energy(grid, problem.c, first.as_ref().unwrap(), level);
        }
        if n + 1 == nt {
            penultimate.assign(level);
        }
        if n == nt {
            last.assign(level);
        }
    })?;
    Ok(TracedSolution {
        trace,
        penultimate,
        last,
        initial_energy,
    })
}

/// Outward normal derivative on Γ from a one-sided second-order stencil.
pub(crate) fn neumann_of_level<T: Real>(
    grid: &GridSpec<T>,
    level: ArrayView2<'_, Cplx<T>>,
    partition: &BoundaryPartition<T>,
    out: &mut [Cplx<T>],
) {
    let (three, four, two) = (T::lit(3.0), T::lit(4.0), T::lit(2.0));
    for (s, o) in partition.samples().iter().zip(out.iter_mut()) {
        let h = s.normal_spacing(grid);
        let (i1, j1) = s.inward(1);
        let (i2, j2) = s.inward(2);
        *o = (level[[s.i, s.j]] * three - level[[i1, j1]] * four + level[[i2, j2]]) / (two * h);
    }
}

/// Γ Neumann trace of every level of a movie.
pub fn neumann_trace<T: Real>(movie: &WaveMovie<T>, partition: &BoundaryPartition<T>) -> Result<BoundaryTrace<T>> {
    let grid = &movie.grid;
    let (a, b) = grid.shape();
    let dims = movie.values.dim();
    if dims.1 != a || dims.2 != b || dims.0 != grid.nt() + 1 {
        return Err(Error::Shape {
            what: "movie",
            expected: vec![grid.nt() + 1, a, b],
            got: vec![dims.0, dims.1, dims.2],
        });
    }
    let mut trace = BoundaryTrace::for_grid(grid, partition, Quantity::Neumann);
    for n in 0..dims.0 {
        neumann_of_level(
            grid,
            movie.level(n),
            partition,
            trace.values.row_mut(n).as_slice_mut().unwrap(),
        );
    }
    Ok(trace)
}

/// Staggered leapfrog energy between consecutive levels `prev`, `curr`:
/// `Σ c|curr − prev|²/dt² + Σ_edges Re(∇curr · conj ∇prev)`, times the cell area.
/// Conserved exactly by the scheme under homogeneous Dirichlet data.
pub fn discrete_energy<T: Real>(grid: &GridSpec<T>, c: &RField<T>, prev: &CField<T>, curr: &CField<T>) -> T {
    let (nx, ny) = (grid.nx(), grid.ny());
    let idt2 = T::one() / (grid.dt() * grid.dt());
    let ihx2 = T::one() / (grid.hx() * grid.hx());
    let ihy2 = T::one() / (grid.hy() * grid.hy());
    let mut kinetic = T::zero();
    for i in 1..nx {
        for j in 1..ny {
            kinetic += c[[i, j]] * (curr[[i, j]] - prev[[i, j]]).norm_sqr();
        }
    }
    let mut potential = T::zero();
    let cross = |a0: Cplx<T>, a1: Cplx<T>, b0: Cplx<T>, b1: Cplx<T>| ((a1 - a0) * (b1 - b0).conj()).re;
    // x-edges (i, j)–(i+1, j) with at least one interior endpoint.
    for i in 0..nx {
        for j in 1..ny {
            potential += ihx2 * cross(curr[[i, j]], curr[[i + 1, j]], prev[[i, j]], prev[[i + 1, j]]);
        }
    }
    for i in 1..nx {
        for j in 0..ny {
            potential += ihy2 * cross(curr[[i, j]], curr[[i, j + 1]], prev[[i, j]], prev[[i, j + 1]]);
        }
    }
    grid.cell_area() * (kinetic * idt2 + potential)
}

/// Discrete L²(Ω) norm (trapezoid weights).
pub fn field_l2_norm<T: Real>(grid: &GridSpec<T>, f: ArrayView2<'_, Cplx<T>>) -> T {
    crate::domain::integrate_with(grid, |i, j| f[[i, j]].norm_sqr()).sqrt()
}

fn plane_wave_data<T: Real>(grid: &GridSpec<T>, eta: &FrequencySample<T>) -> (CField<T>, CField<T>) {
    (
        grid.complex_field(|x, y| eta.phi(x, y)),
        grid.complex_field(|x, y| eta.psi(x, y)),
    )
}

/// Γ Neumann trace of the solution with plane-wave data
/// `φ = e^{iη·x}`, `ψ = −i|η|e^{iη·x}`, `f = e^{iη·x − i|η|t}` and
/// `c = c₀ + α c₁`; `α = 0` gives the background map.
pub fn dtn_apply<T: Real>(
    alpha: T,
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
    partition: &BoundaryPartition<T>,
) -> Result<BoundaryTrace<T>> {
    let field = coeff.with_alpha(alpha)?;
    let (phi, psi) = plane_wave_data(grid, eta);
    let f = |x: T, y: T, t: T| eta.f(x, y, t);
    let problem = Ivbp {
        c: field.calpha(),
        phi: &phi,
        psi: &psi,
        dirichlet: Dirichlet::Analytic(&f),
        source: None,
    };
    let mut trace = solve_traced(grid, &problem, partition)?.trace;
    trace.eta = Some(eta.eta());
    trace.alpha = Some(alpha);
    Ok(trace)
}

/// `Λ_α(f̃) − Λ₀(f̃)` on Γ.
pub fn dtn_difference<T: Real>(
    alpha: T,
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
    partition: &BoundaryPartition<T>,
) -> Result<BoundaryTrace<T>> {
    let pert = dtn_apply(alpha, eta, coeff, grid, partition)?;
    let back = dtn_apply(T::zero(), eta, coeff, grid, partition)?;
    pert.difference(&back, Quantity::DtnDifference)
}

/// Movie of the plane-wave problem with `c = c₀ + α c₁`.
pub fn plane_wave_movie<T: Real>(
    alpha: T,
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
) -> Result<WaveMovie<T>> {
    let field = coeff.with_alpha(alpha)?;
    let (phi, psi) = plane_wave_data(grid, eta);
    let f = |x: T, y: T, t: T| eta.f(x, y, t);
    let problem = Ivbp {
        c: field.calpha(),
        phi: &phi,
        psi: &psi,
        dirichlet: Dirichlet::Analytic(&f),
        source: None,
    };
    let family = if alpha == T::zero() {
        BcFamily::Background
    } else {
        BcFamily::Perturbed
    };
    solve_ivbp(grid, &problem, family)
}

/// `i ∇·(η c₁ e^{iη·x})` by centered differences of the analytic integrand;
/// zero on ∂Ω.
pub fn veta_initial_velocity<T: Real>(
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
) -> CField<T> {
    let c1 = coeff.c1();
    let integrand = grid.complex_field(|x, y| eta.phi(x, y));
    let integrand = ndarray::Zip::from(&integrand).and(c1).map_collect(|&e, &c| e * c);
    let [ex, ey] = eta.eta();
    let two = T::lit(2.0);
    let i_unit = Cplx::new(T::zero(), T::one());
    let mut out = CField::from_elem(grid.shape(), czero());
    for i in 1..grid.nx() {
        for j in 1..grid.ny() {
            let dx = (integrand[[i + 1, j]] - integrand[[i - 1, j]]) / (two * grid.hx());
            let dy = (integrand[[i, j + 1]] - integrand[[i, j - 1]]) / (two * grid.hy());
            out[[i, j]] = i_unit * (dx * ex + dy * ey);
        }
    }
    out
}

fn veta_problem_fields<T: Real>(
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
) -> (CField<T>, CField<T>) {
    (
        CField::from_elem(grid.shape(), czero()),
        veta_initial_velocity(eta, coeff, grid),
    )
}

/// Γ Neumann trace `Λ₀(v_η)` of the auxiliary problem
/// `(c₀∂ₜ² − Δ)v = 0`, `v(0) = 0`, `∂ₜv(0) = i∇·(ηc₁e^{iη·x})`, `v = 0` on ∂Ω.
pub fn solve_veta<T: Real>(
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
    partition: &BoundaryPartition<T>,
) -> Result<BoundaryTrace<T>> {
    let (phi, psi) = veta_problem_fields(eta, coeff, grid);
    let problem = Ivbp {
        c: coeff.c0(),
        phi: &phi,
        psi: &psi,
        dirichlet: Dirichlet::Zero,
        source: None,
    };
    let mut trace = solve_traced(grid, &problem, partition)?.trace;
    trace.quantity = Quantity::AuxNeumann;
    trace.eta = Some(eta.eta());
    Ok(trace)
}

/// Full movie of the auxiliary problem.
pub fn veta_movie<T: Real>(
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
) -> Result<WaveMovie<T>> {
    let (phi, psi) = veta_problem_fields(eta, coeff, grid);
    let problem = Ivbp {
        c: coeff.c0(),
        phi: &phi,
        psi: &psi,
        dirichlet: Dirichlet::Zero,
        source: None,
    };
    solve_ivbp(grid, &problem, BcFamily::Auxiliary)
}

/// `max_t ‖u_α − u₀‖_{L²(Ω)}` for the plane-wave problem, marching both
/// solutions in lockstep.
pub fn perturbation_sup_l2<T: Real>(
    alpha: T,
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
) -> Result<T> {
    let background = plane_wave_movie(T::zero(), eta, coeff, grid)?;
    let field = coeff.with_alpha(alpha)?;
    let (phi, psi) = plane_wave_data(grid, eta);
    let f = |x: T, y: T, t: T| eta.f(x, y, t);
    let problem = Ivbp {
        c: field.calpha(),
        phi: &phi,
        psi: &psi,
        dirichlet: Dirichlet::Analytic(&f),
        source: None,
    };
    let mut sup = T::zero();
    solve_with_observer(grid, &problem, &mut |n, level| {
        let diff = level - &background.level(n);
        sup = sup.max(field_l2_norm(grid, diff.view()));
    })?;
    Ok(sup)
}
