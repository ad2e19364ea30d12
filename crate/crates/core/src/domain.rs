//! Geometry of the rectangle Ω, the inner region Ω′, the observed boundary
//! patch Γ, coefficient fields and the cutoff β.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::{cis, Cplx, Real};

/// Real nodal field, indexed `[ix, iy]`.
pub type RField<T> = Array2<T>;
/// Complex nodal field, indexed `[ix, iy]`.
pub type CField<T> = Array2<Cplx<T>>;

const CONSISTENCY_TOL: f64 = 1e-9;

/// Geometry description accepted by [`build_grid`].
#[derive(Clone, Debug)]
pub struct GridConfig<T> {
    pub lx: T,
    pub ly: T,
    pub nx: usize,
    pub ny: usize,
    /// Explicit spacings; when given they must agree with `lx / nx`.
    pub hx: Option<T>,
    pub hy: Option<T>,
    pub t_final: T,
    /// Explicit time step. When absent, `nt` or the CFL rule picks one.
    pub dt: Option<T>,
    pub nt: Option<usize>,
    pub cfl_factor: T,
    /// Smallest coefficient value the grid must support. `None` defers the
    /// CFL check to the solvers.
    pub c_min: Option<T>,
}

impl<T: Real> GridConfig<T> {
    /// Unit-speed square `[0, l]²` with `n` cells per side and the default
    /// time step `0.4·h`.
    pub fn square(l: T, n: usize, t_final: T) -> Self {
        Self {
            lx: l,
            ly: l,
            nx: n,
            ny: n,
            hx: None,
            hy: None,
            t_final,
            dt: None,
            nt: None,
            cfl_factor: T::lit(0.5),
            c_min: Some(T::one()),
        }
    }
}

/// Uniform space-time grid on `[0, Lx] × [0, Ly] × [0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    nx: usize,
    ny: usize,
    hx: T,
    hy: T,
    lx: T,
    ly: T,
    nt: usize,
    dt: T,
    t_final: T,
    cfl_factor: T,
}

/// Builds and validates a [`GridSpec`].
pub fn build_grid<T: Real>(cfg: &GridConfig<T>) -> Result<GridSpec<T>> {
    let positive = |name: &'static str, v: T| {
        if v > T::zero() && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name,
                reason: format!("must be positive, got {v}"),
            })
        }
    };
    positive("lx", cfg.lx)?;
    positive("ly", cfg.ly)?;
    positive("t_final", cfg.t_final)?;
    positive("cfl_factor", cfg.cfl_factor)?;
    if cfg.nx < 4 || cfg.ny < 4 {
        return Err(Error::InvalidParameter {
            name: "nx/ny",
            reason: format!("need at least 4 cells per axis, got {}x{}", cfg.nx, cfg.ny),
        });
    }

    let hx = spacing("hx", cfg.lx, cfg.nx, cfg.hx)?;
    let hy = spacing("hy", cfg.ly, cfg.ny, cfg.hy)?;
    let h_min = hx.min(hy);
    let c_ref = cfg.c_min.unwrap_or(T::one());

    let (nt, dt) = match (cfg.dt, cfg.nt) {
        (Some(dt), nt_opt) => {
            positive("dt", dt)?;
            let nt = (cfg.t_final / dt).round().to_usize().unwrap_or(0).max(1);
            let mismatch = (T::from_usize_lossy(nt) * dt - cfg.t_final).abs() / cfg.t_final;
            if mismatch.as_f64() > CONSISTENCY_TOL {
                return Err(Error::GridConsistency(format!(
                    "nt*dt = {} differs from T = {}",
                    T::from_usize_lossy(nt) * dt,
                    cfg.t_final
                )));
            }
            if let Some(n) = nt_opt {
                if n != nt {
                    return Err(Error::GridConsistency(format!(
                        "nt = {n} disagrees with T/dt = {nt}"
                    )));
                }
            }
            (nt, dt)
        }
        (None, Some(nt)) => {
            if nt == 0 {
                return Err(Error::InvalidParameter {
                    name: "nt",
                    reason: "must be positive".into(),
                });
            }
            (nt, cfg.t_final / T::from_usize_lossy(nt))
        }
        (None, None) => {
            let target = T::lit(0.8) * cfg.cfl_factor * h_min * c_ref.sqrt();
            let nt = (cfg.t_final / target - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
            (nt, cfg.t_final / T::from_usize_lossy(nt))
        }
    };

    let grid = GridSpec {
        nx: cfg.nx,
        ny: cfg.ny,
        hx,
        hy,
        lx: cfg.lx,
        ly: cfg.ly,
        nt,
        dt,
        t_final: cfg.t_final,
        cfl_factor: cfg.cfl_factor,
    };
    if let Some(c_min) = cfg.c_min {
        grid.check_cfl(c_min)?;
    }
    Ok(grid)
}

fn spacing<T: Real>(name: &'static str, l: T, n: usize, given: Option<T>) -> Result<T> {
    let derived = l / T::from_usize_lossy(n);
    match given {
        None => Ok(derived),
        Some(h) => {
            let mismatch = (h * T::from_usize_lossy(n) - l).abs() / l;
            if mismatch.as_f64() > CONSISTENCY_TOL {
                Err(Error::GridConsistency(format!(
                    "{name}: n*h = {} differs from extent {l}",
                    h * T::from_usize_lossy(n)
                )))
            } else {
                Ok(h)
            }
        }
    }
}

impl<T: Real> GridSpec<T> {
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> T {
        self.hx
    }
    pub fn hy(&self) -> T {
        self.hy
    }
    pub fn lx(&self) -> T {
        self.lx
    }
    pub fn ly(&self) -> T {
        self.ly
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn dt(&self) -> T {
        self.dt
    }
    pub fn t_final(&self) -> T {
        self.t_final
    }
    pub fn cfl_factor(&self) -> T {
        self.cfl_factor
    }
    pub fn h_min(&self) -> T {
        self.hx.min(self.hy)
    }
    pub fn cell_area(&self) -> T {
        self.hx * self.hy
    }
    /// Node-array shape `(nx + 1, ny + 1)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.nx + 1, self.ny + 1)
    }
    pub fn x(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.hx
    }
    pub fn y(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.hy
    }
    pub fn time(&self, n: usize) -> T {
        T::from_usize_lossy(n) * self.dt
    }
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Largest admissible step for the given minimum coefficient.
    pub fn dt_max(&self, c_min: T) -> T {
        self.cfl_factor * self.h_min() * c_min.sqrt()
    }

    pub fn check_cfl(&self, c_min: T) -> Result<()> {
        if !(c_min > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "c_min",
                reason: format!("must be positive, got {c_min}"),
            });
        }
        let dt_max = self.dt_max(c_min);
        if self.dt > dt_max * (T::one() + T::lit(CONSISTENCY_TOL)) {
            return Err(Error::Cfl {
                dt: self.dt.as_f64(),
                dt_max: dt_max.as_f64(),
            });
        }
        Ok(())
    }

    /// Same space grid, final time `t_final` sampled with `nt` steps.
    pub fn with_time(&self, t_final: T, nt: usize) -> Self {
        Self {
            t_final,
            nt,
            dt: t_final / T::from_usize_lossy(nt),
            ..self.clone()
        }
    }

    /// Halves every spacing and the time step.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            hx: self.hx / T::lit(2.0),
            hy: self.hy / T::lit(2.0),
            nt: 2 * self.nt,
            dt: self.dt / T::lit(2.0),
            ..self.clone()
        }
    }

    pub fn real_field(&self, f: impl Fn(T, T) -> T) -> RField<T> {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.x(i), self.y(j)))
    }

    pub fn complex_field(&self, f: impl Fn(T, T) -> Cplx<T>) -> CField<T> {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.x(i), self.y(j)))
    }

    /// Perimeter nodes in counter-clockwise order starting at the origin.
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(2 * (nx + ny));
        out.extend((0..nx).map(|i| (i, 0)));
        out.extend((0..ny).map(|j| (nx, j)));
        out.extend((1..=nx).rev().map(|i| (i, ny)));
        out.extend((1..=ny).rev().map(|j| (0, j)));
        out
    }

    pub(crate) fn check_shape<A>(&self, what: &'static str, f: &Array2<A>) -> Result<()> {
        let (a, b) = self.shape();
        if f.dim() != (a, b) {
            return Err(Error::Shape {
                what,
                expected: vec![a, b],
                got: vec![f.dim().0, f.dim().1],
            });
        }
        Ok(())
    }
}

/// Composite trapezoid rule over Ω for a nodal real field.
pub fn integrate<T: Real>(grid: &GridSpec<T>, f: &RField<T>) -> T {
    integrate_with(grid, |i, j| f[[i, j]])
}

/// Composite trapezoid rule over Ω for a nodal complex field.
pub fn integrate_complex<T: Real>(grid: &GridSpec<T>, f: &CField<T>) -> Cplx<T> {
    let re = integrate_with(grid, |i, j| f[[i, j]].re);
    let im = integrate_with(grid, |i, j| f[[i, j]].im);
    Cplx::new(re, im)
}

pub(crate) fn integrate_with<T: Real>(grid: &GridSpec<T>, f: impl Fn(usize, usize) -> T) -> T {
    let (nx, ny) = (grid.nx(), grid.ny());
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for i in 0..=nx {
        let wi = if i == 0 || i == nx { half } else { T::one() };
        for j in 0..=ny {
            let wj = if j == 0 || j == ny { half } else { T::one() };
            acc += wi * wj * f(i, j);
        }
    }
    acc * grid.cell_area()
}

/// Sub-region Ω′ of Ω.
#[derive(Clone, Debug, PartialEq)]
pub enum Region<T> {
    Rect { x0: T, x1: T, y0: T, y1: T },
    Disk { cx: T, cy: T, r: T },
}

impl<T: Real> Region<T> {
    /// Rectangle concentric with `[0,lx]×[0,ly]` of the given half-widths.
    pub fn centered_rect(lx: T, ly: T, half_x: T, half_y: T) -> Self {
        let two = T::lit(2.0);
        Region::Rect {
            x0: lx / two - half_x,
            x1: lx / two + half_x,
            y0: ly / two - half_y,
            y1: ly / two + half_y,
        }
    }

    pub fn contains(&self, x: T, y: T) -> bool {
        let eps = T::lit(1e-12);
        match *self {
            Region::Rect { x0, x1, y0, y1 } => {
                x >= x0 - eps && x <= x1 + eps && y >= y0 - eps && y <= y1 + eps
            }
            Region::Disk { cx, cy, r } => (x - cx).hypot(y - cy) <= r + eps,
        }
    }

    /// Whether the closed ball `B(center, radius)` lies inside the region.
    pub fn contains_ball(&self, cx: T, cy: T, radius: T) -> bool {
        let eps = T::lit(1e-12);
        match *self {
            Region::Rect { x0, x1, y0, y1 } => {
                cx - radius >= x0 - eps
                    && cx + radius <= x1 + eps
                    && cy - radius >= y0 - eps
                    && cy + radius <= y1 + eps
            }
            Region::Disk { cx: dx, cy: dy, r } => (cx - dx).hypot(cy - dy) + radius <= r + eps,
        }
    }

    /// Whether the region grown by `margin` sits strictly inside `[0,lx]×[0,ly]`.
    pub fn fits_with_margin(&self, lx: T, ly: T, margin: T) -> bool {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => {
                x0 - margin > T::zero() && y0 - margin > T::zero() && x1 + margin < lx && y1 + margin < ly
            }
            Region::Disk { cx, cy, r } => {
                cx - r - margin > T::zero()
                    && cy - r - margin > T::zero()
                    && cx + r + margin < lx
                    && cy + r + margin < ly
            }
        }
    }

    /// Cutoff profile value: 1 inside, decays to 0 across a layer of width `margin`.
    fn cutoff(&self, x: T, y: T, margin: T) -> T {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => {
                let dx = (x0 - x).max(x - x1).max(T::zero());
                let dy = (y0 - y).max(y - y1).max(T::zero());
                falloff(dx / margin) * falloff(dy / margin)
            }
            Region::Disk { cx, cy, r } => {
                let d = ((x - cx).hypot(y - cy) - r).max(T::zero());
                falloff(d / margin)
            }
        }
    }
}

/// `1 - S(s)` with `S` the quintic smoothstep, clamped to `[0,1]`; C² at both ends.
fn falloff<T: Real>(s: T) -> T {
    if s <= T::zero() {
        T::one()
    } else if s >= T::one() {
        T::zero()
    } else {
        let step = s * s * s * (s * (s * T::lit(6.0) - T::lit(15.0)) + T::lit(10.0));
        T::one() - step
    }
}

/// One side of the rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn outward_normal<T: Real>(self) -> [T; 2] {
        let (o, z) = (T::one(), T::zero());
        match self {
            Side::Bottom => [z, -o],
            Side::Right => [o, z],
            Side::Top => [z, o],
            Side::Left => [-o, z],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bottom" | "south" => Some(Side::Bottom),
            "right" | "east" => Some(Side::Right),
            "top" | "north" => Some(Side::Top),
            "left" | "west" => Some(Side::Left),
            _ => None,
        }
    }

    fn contains_node(self, nx: usize, ny: usize, i: usize, j: usize) -> bool {
        match self {
            Side::Bottom => j == 0,
            Side::Right => i == nx,
            Side::Top => j == ny,
            Side::Left => i == 0,
        }
    }
}

/// A measurement point on Γ.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSample<T> {
    pub side: Side,
    pub i: usize,
    pub j: usize,
    pub x: T,
    pub y: T,
    pub normal: [T; 2],
    /// Arclength quadrature weight.
    pub weight: T,
}

impl<T: Real> GammaSample<T> {
    /// Node one cell inward along the normal (`k = 1`) or two cells (`k = 2`).
    pub fn inward(&self, k: usize) -> (usize, usize) {
        match self.side {
            Side::Bottom => (self.i, self.j + k),
            Side::Right => (self.i - k, self.j),
            Side::Top => (self.i, self.j - k),
            Side::Left => (self.i + k, self.j),
        }
    }

    /// Spacing along the normal direction.
    pub fn normal_spacing(&self, grid: &GridSpec<T>) -> T {
        match self.side {
            Side::Bottom | Side::Top => grid.hy(),
            Side::Left | Side::Right => grid.hx(),
        }
    }
}

/// Which part of ∂Ω a boundary node belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryPart {
    Gamma,
    Complement,
}

/// Split of ∂Ω into the observed patch Γ (a union of full sides) and Γ_c.
///
/// Γ samples are the side nodes without the rectangle corners; corner values
/// never enter the five-point stencil, and every trace handled here vanishes
/// there.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPartition<T> {
    sides: Vec<Side>,
    samples: Vec<GammaSample<T>>,
    nx: usize,
    ny: usize,
}

impl<T: Real> BoundaryPartition<T> {
    pub fn new(grid: &GridSpec<T>, sides: &[Side]) -> Result<Self> {
        let mut sides: Vec<Side> = sides.to_vec();
        sides.sort();
        sides.dedup();
        if sides.is_empty() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "at least one side required".into(),
            });
        }
        if sides.len() == 4 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "Γ must be a proper part of the boundary".into(),
            });
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut samples = Vec::new();
        for &side in &sides {
            let normal = side.outward_normal();
            let nodes: Vec<(usize, usize)> = match side {
                Side::Bottom => (1..nx).map(|i| (i, 0)).collect(),
                Side::Right => (1..ny).map(|j| (nx, j)).collect(),
                Side::Top => (1..nx).map(|i| (i, ny)).collect(),
                Side::Left => (1..ny).map(|j| (0, j)).collect(),
            };
            let weight = match side {
                Side::Bottom | Side::Top => grid.hx(),
                Side::Left | Side::Right => grid.hy(),
            };
            samples.extend(nodes.into_iter().map(|(i, j)| GammaSample {
                side,
                i,
                j,
                x: grid.x(i),
                y: grid.y(j),
                normal,
                weight,
            }));
        }
        Ok(Self {
            sides,
            samples,
            nx,
            ny,
        })
    }

    /// Default observation patch: the right and top sides.
    pub fn default_for(grid: &GridSpec<T>) -> Result<Self> {
        Self::new(grid, &[Side::Right, Side::Top])
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }
    pub fn samples(&self) -> &[GammaSample<T>] {
        &self.samples
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Classifies a boundary node; `None` for interior nodes. A corner is on Γ
    /// only when both sides meeting there are.
    pub fn classify(&self, i: usize, j: usize) -> Option<BoundaryPart> {
        let (nx, ny) = (self.nx, self.ny);
        if !(i == 0 || j == 0 || i == nx || j == ny) {
            return None;
        }
        let touching: Vec<Side> = Side::ALL
            .iter()
            .copied()
            .filter(|s| s.contains_node(nx, ny, i, j))
            .collect();
        if touching.iter().all(|s| self.sides.contains(s)) {
            Some(BoundaryPart::Gamma)
        } else {
            Some(BoundaryPart::Complement)
        }
    }

    /// Rough geometric-control test for the rectangle: Γ must contain two
    /// adjacent sides (or two opposite ones) and `T` must cover two full
    /// perimeter-crossings at the slowest speed.
    pub fn presumed_geometric_control(&self, grid: &GridSpec<T>, c_max: T) -> bool {
        let has = |s: Side| self.sides.contains(&s);
        let two_sides = (has(Side::Right) || has(Side::Left)) && (has(Side::Top) || has(Side::Bottom));
        let t_needed = T::lit(2.0) * (grid.lx() + grid.ly()) * c_max.sqrt();
        two_sides && grid.t_final() >= t_needed * T::lit(0.999)
    }
}

/// c_α = c₀ + α c₁ on Ω, with the support and lower-bound conditions checked
/// at every node.
#[derive(Clone, Debug)]
pub struct CoefficientField<T> {
    c0: RField<T>,
    c1: RField<T>,
    alpha: T,
    c2: T,
    bound_m: T,
    c_star: T,
    omega_prime: Region<T>,
    calpha: RField<T>,
}

impl<T: Real> CoefficientField<T> {
    /// `c2` is the exterior constant; it is recorded but no solver reads it.
    pub fn new(
        grid: &GridSpec<T>,
        c0: RField<T>,
        c1: RField<T>,
        alpha: T,
        c2: T,
        c_star: T,
        omega_prime: Region<T>,
    ) -> Result<Self> {
        grid.check_shape("c0", &c0)?;
        grid.check_shape("c1", &c1)?;
        if !(c_star > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "c_star",
                reason: "must be positive".into(),
            });
        }
        if !(alpha >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be non-negative, got {alpha}"),
            });
        }
        if let Some(v) = c0.iter().find(|v| !(**v > T::zero())) {
            return Err(Error::InvalidParameter {
                name: "c0",
                reason: format!("must be positive, found {v}"),
            });
        }
        let mut bound_m = T::neg_infinity();
        for ((i, j), &v) in c1.indexed_iter() {
            let (x, y) = (grid.x(i), grid.y(j));
            if omega_prime.contains(x, y) {
                bound_m = bound_m.max(v);
            } else if v != T::zero() {
                return Err(Error::Support(format!(
                    "c1 = {v} at ({x}, {y}) outside the inner region"
                )));
            }
        }
        if bound_m == T::neg_infinity() {
            bound_m = T::zero();
        }
        let calpha = &c0 + &c1.mapv(|v| alpha * v);
        let min = calpha.iter().copied().fold(T::infinity(), T::min);
        if min < c_star {
            return Err(Error::LowerBound {
                min: min.as_f64(),
                c_star: c_star.as_f64(),
            });
        }
        Ok(Self {
            c0,
            c1,
            alpha,
            c2,
            bound_m,
            c_star,
            omega_prime,
            calpha,
        })
    }

    /// Constant background `c0_value` with default `c_* = c0_value / 2`.
    pub fn with_constant_background(
        grid: &GridSpec<T>,
        c0_value: T,
        c1: RField<T>,
        alpha: T,
        omega_prime: Region<T>,
    ) -> Result<Self> {
        let c0 = RField::from_elem(grid.shape(), c0_value);
        Self::new(grid, c0, c1, alpha, c0_value, c0_value * T::lit(0.5), omega_prime)
    }

    /// Same fields with a different perturbation magnitude.
    pub fn with_alpha(&self, alpha: T) -> Result<Self> {
        let shape = self.c0.dim();
        let grid_like = self.c0.clone();
        let calpha = &grid_like + &self.c1.mapv(|v| alpha * v);
        let min = calpha.iter().copied().fold(T::infinity(), T::min);
        if !(alpha >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be non-negative, got {alpha}"),
            });
        }
        if min < self.c_star {
            return Err(Error::LowerBound {
                min: min.as_f64(),
                c_star: self.c_star.as_f64(),
            });
        }
        debug_assert_eq!(calpha.dim(), shape);
        Ok(Self {
            alpha,
            calpha,
            ..self.clone()
        })
    }

    pub fn c0(&self) -> &RField<T> {
        &self.c0
    }
    pub fn c1(&self) -> &RField<T> {
        &self.c1
    }
    pub fn calpha(&self) -> &RField<T> {
        &self.calpha
    }
    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn c2(&self) -> T {
        self.c2
    }
    /// `M = sup c₁` over Ω′.
    pub fn bound_m(&self) -> T {
        self.bound_m
    }
    pub fn c_star(&self) -> T {
        self.c_star
    }
    pub fn omega_prime(&self) -> &Region<T> {
        &self.omega_prime
    }

    /// Whether c₀ is the same value at every node.
    pub fn constant_background(&self) -> Option<T> {
        let first = *self.c0.iter().next()?;
        self.c0.iter().all(|&v| v == first).then_some(first)
    }

    pub fn calpha_min(&self) -> T {
        self.calpha.iter().copied().fold(T::infinity(), T::min)
    }
    pub fn calpha_max(&self) -> T {
        self.calpha.iter().copied().fold(T::neg_infinity(), T::max)
    }
    pub fn c0_min(&self) -> T {
        self.c0.iter().copied().fold(T::infinity(), T::min)
    }
    pub fn c0_max(&self) -> T {
        self.c0.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Smooth cutoff β with β ≡ 1 on Ω′ and β ≡ 0 near ∂Ω.
#[derive(Clone, Debug)]
pub struct CutoffField<T> {
    pub beta: RField<T>,
}

impl<T: Real> CutoffField<T> {
    /// β ≡ 0, which makes the control problem trivial.
    pub fn zero(grid: &GridSpec<T>) -> Self {
        Self {
            beta: RField::zeros(grid.shape()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.beta.iter().all(|&v| v == T::zero())
    }
}

pub fn make_cutoff_beta<T: Real>(
    grid: &GridSpec<T>,
    omega_prime: &Region<T>,
    margin: T,
) -> Result<CutoffField<T>> {
    if !(margin > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "margin",
            reason: "must be positive".into(),
        });
    }
    if !omega_prime.fits_with_margin(grid.lx(), grid.ly(), margin) {
        return Err(Error::InvalidParameter {
            name: "margin",
            reason: format!("inner region grown by {margin} does not fit strictly inside the domain"),
        });
    }
    let beta = grid.real_field(|x, y| omega_prime.cutoff(x, y, margin));
    Ok(CutoffField { beta })
}

/// Compactly supported bump `amplitude · exp(1 − 1/(1 − r²/R²))`.
pub fn make_bump_c1<T: Real>(
    grid: &GridSpec<T>,
    center: [T; 2],
    radius: T,
    amplitude: T,
    omega_prime: &Region<T>,
) -> Result<RField<T>> {
    if !(radius > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "radius",
            reason: "must be positive".into(),
        });
    }
    if !omega_prime.contains_ball(center[0], center[1], radius) {
        return Err(Error::Support(format!(
            "bump of radius {radius} at ({}, {}) leaves the inner region",
            center[0], center[1]
        )));
    }
    Ok(grid.real_field(|x, y| bump_value(x - center[0], y - center[1], radius, amplitude)))
}

/// Value of the bump profile at offset `(dx, dy)` from its center.
pub fn bump_value<T: Real>(dx: T, dy: T, radius: T, amplitude: T) -> T {
    let s = (dx * dx + dy * dy) / (radius * radius);
    if s >= T::one() || amplitude == T::zero() {
        T::zero()
    } else {
        amplitude * (T::one() - T::one() / (T::one() - s)).exp()
    }
}

/// A frequency η ≠ 0 and the plane-wave data it induces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencySample<T> {
    eta: [T; 2],
    abs_eta: T,
}

impl<T: Real> FrequencySample<T> {
    pub fn new(eta: [T; 2]) -> Result<Self> {
        let abs_eta = eta[0].hypot(eta[1]);
        if !(abs_eta > T::zero()) {
            return Err(Error::ZeroFrequency);
        }
        Ok(Self { eta, abs_eta })
    }

    pub fn eta(&self) -> [T; 2] {
        self.eta
    }
    pub fn abs_eta(&self) -> T {
        self.abs_eta
    }
    pub fn negated(&self) -> Self {
        Self {
            eta: [-self.eta[0], -self.eta[1]],
            abs_eta: self.abs_eta,
        }
    }

    #[inline]
    pub fn phase(&self, x: T, y: T) -> T {
        self.eta[0] * x + self.eta[1] * y
    }

    /// φ(x) = e^{iη·x}
    #[inline]
    pub fn phi(&self, x: T, y: T) -> Cplx<T> {
        cis(self.phase(x, y))
    }

    /// ψ(x) = −i|η| e^{iη·x}
    #[inline]
    pub fn psi(&self, x: T, y: T) -> Cplx<T> {
        self.phi(x, y) * Cplx::new(T::zero(), -self.abs_eta)
    }

    /// f(x, t) = e^{iη·x − i|η|t}
    #[inline]
    pub fn f(&self, x: T, y: T, t: T) -> Cplx<T> {
        cis(self.phase(x, y) - self.abs_eta * t)
    }

    /// ∂ₜf(x, t)
    #[inline]
    pub fn f_t(&self, x: T, y: T, t: T) -> Cplx<T> {
        self.f(x, y, t) * Cplx::new(T::zero(), -self.abs_eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> GridSpec<f64> {
        build_grid(&GridConfig::square(1.0, 64, 4.0)).unwrap()
    }

    #[test]
    fn default_grid_is_consistent() {
        let g = unit_grid();
        assert_eq!(g.nt(), 640);
        assert!((g.dt() - 0.4 / 64.0).abs() < 1e-15);
        assert!((g.nx() as f64 * g.hx() - 1.0).abs() < 1e-12);
        assert!((g.nt() as f64 * g.dt() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_step_reports_admissible_maximum() {
        let mut cfg = GridConfig::square(1.0, 64, 4.0);
        cfg.dt = Some(10.0 / 64.0);
        cfg.t_final = 10.0 / 64.0 * 30.0;
        match build_grid(&cfg) {
            Err(Error::Cfl { dt_max, .. }) => assert!((dt_max - 0.5 / 64.0).abs() < 1e-15),
            other => panic!("expected CFL error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_spacing_is_rejected() {
        let mut cfg = GridConfig::square(1.0, 64, 4.0);
        cfg.hx = Some(1.0 / 64.0 + 1e-3 / 64.0);
        assert!(matches!(build_grid(&cfg), Err(Error::GridConsistency(_))));
    }

    #[test]
    fn inconsistent_time_step_is_rejected() {
        let mut cfg = GridConfig::square(1.0, 64, 4.0);
        cfg.dt = Some(0.0061);
        assert!(matches!(build_grid(&cfg), Err(Error::GridConsistency(_))));
    }

    #[test]
    fn boundary_nodes_cover_perimeter_once() {
        let g = build_grid(&GridConfig::square(1.0, 8, 1.0)).unwrap();
        let nodes = g.boundary_nodes();
        assert_eq!(nodes.len(), 32);
        let mut sorted = nodes.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 32);
        assert!(nodes.iter().all(|&(i, j)| g.is_boundary(i, j)));
    }

    #[test]
    fn partition_splits_boundary() {
        let g = build_grid(&GridConfig::square(1.0, 8, 1.0)).unwrap();
        let p = BoundaryPartition::default_for(&g).unwrap();
        assert_eq!(p.len(), 14);
        for s in p.samples() {
            let n2: f64 = s.normal[0] * s.normal[0] + s.normal[1] * s.normal[1];
            assert!((n2 - 1.0).abs() < 1e-15);
            assert_eq!(p.classify(s.i, s.j), Some(BoundaryPart::Gamma));
        }
        let mut gamma = 0;
        let mut comp = 0;
        for (i, j) in g.boundary_nodes() {
            match p.classify(i, j).unwrap() {
                BoundaryPart::Gamma => gamma += 1,
                BoundaryPart::Complement => comp += 1,
            }
        }
        // 14 side nodes plus the shared corner (1,1).
        assert_eq!(gamma, 15);
        assert_eq!(gamma + comp, 32);
        assert_eq!(p.classify(3, 3), None);
    }

    #[test]
    fn empty_or_full_gamma_rejected() {
        let g = unit_grid();
        assert!(BoundaryPartition::new(&g, &[]).is_err());
        assert!(BoundaryPartition::new(&g, &Side::ALL).is_err());
    }

    #[test]
    fn bump_zero_amplitude_is_zero() {
        let g = unit_grid();
        let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
        let c1 = make_bump_c1(&g, [0.5, 0.5], 0.2, 0.0, &op).unwrap();
        assert!(c1.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bump_peaks_at_center_and_vanishes_outside() {
        let g = unit_grid();
        let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
        let c1 = make_bump_c1(&g, [0.5, 0.5], 0.2, 1.0, &op).unwrap();
        assert_eq!(c1[[32, 32]], 1.0);
        let max = c1.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(max, 1.0);
        for ((i, j), &v) in c1.indexed_iter() {
            let r = (g.x(i) - 0.5).hypot(g.y(j) - 0.5);
            if r >= 0.2 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn bump_outside_inner_region_rejected() {
        let g = unit_grid();
        let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
        assert!(matches!(
            make_bump_c1(&g, [0.5, 0.5], 0.3, 1.0, &op),
            Err(Error::Support(_))
        ));
    }

    #[test]
    fn bump_integral_converges_under_refinement() {
        // Reference by radial quadrature: 2π ∫₀ᴿ exp(1 − 1/(1 − r²/R²)) r dr.
        let r_b = 0.2_f64;
        let n = 20_000;
        let mut radial = 0.0;
        for k in 0..n {
            let r = (k as f64 + 0.5) * r_b / n as f64;
            radial += bump_value(r, 0.0, r_b, 1.0) * r;
        }
        radial *= 2.0 * std::f64::consts::PI * r_b / n as f64;

        let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
        let mut errs = Vec::new();
        for n_cells in [16, 32] {
            let g = build_grid(&GridConfig::square(1.0, n_cells, 1.0)).unwrap();
            let c1 = make_bump_c1(&g, [0.5, 0.5], r_b, 1.0, &op).unwrap();
            errs.push((integrate(&g, &c1) - radial).abs());
        }
        // Trapezoid on a smooth compact bump converges at least as fast as h².
        assert!(errs[1] <= errs[0] / 4.0 * 1.05 + 1e-12, "{errs:?}");
        assert!(errs[1] < 1e-4);
    }

    #[test]
    fn cutoff_profile() {
        let g = unit_grid();
        let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
        let beta = make_cutoff_beta(&g, &op, 0.125).unwrap();
        assert_eq!(beta.beta[[32, 32]], 1.0);
        assert_eq!(beta.beta[[16, 40]], 1.0);
        assert_eq!(beta.beta[[0, 20]], 0.0);
        assert_eq!(beta.beta[[64, 64]], 0.0);
        // x = 0.25 − 0.0625 is the middle of the left transition layer.
        let mid = beta.beta[[12, 32]];
        assert!((mid - 0.5).abs() < 1e-12, "{mid}");
        for ((i, j), &b) in beta.beta.indexed_iter() {
            assert!((0.0..=1.0).contains(&b));
            if g.is_boundary(i, j) {
                assert_eq!(b, 0.0);
            }
        }
    }

    #[test]
    fn cutoff_margin_too_large() {
        let g = unit_grid();
        let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
        assert!(make_cutoff_beta(&g, &op, 0.25).is_err());
    }

    #[test]
    fn coefficient_invariants() {
        let g = unit_grid();
        let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
        let c1 = make_bump_c1(&g, [0.5, 0.5], 0.2, 1.0, &op).unwrap();
        let beta = make_cutoff_beta(&g, &op, 0.125).unwrap();
        for alpha in [0.0, 0.01, 0.02, 0.04, 0.3] {
            let cf = CoefficientField::with_constant_background(&g, 1.0, c1.clone(), alpha, op.clone())
                .unwrap();
            assert!(cf.calpha_min() >= cf.c_star());
            assert_eq!(cf.bound_m(), 1.0);
            for ((i, j), &ca) in cf.calpha().indexed_iter() {
                assert!((ca - cf.c0()[[i, j]] - alpha * cf.c1()[[i, j]]).abs() < 1e-15);
                assert_eq!(beta.beta[[i, j]] * cf.c1()[[i, j]], cf.c1()[[i, j]]);
            }
        }
    }

    #[test]
    fn coefficient_rejects_bad_support_and_bound() {
        let g = unit_grid();
        let op = Region::centered_rect(1.0, 1.0, 0.25, 0.25);
        let mut c1 = RField::zeros(g.shape());
        c1[[2, 2]] = 0.1;
        assert!(matches!(
            CoefficientField::with_constant_background(&g, 1.0, c1, 0.02, op.clone()),
            Err(Error::Support(_))
        ));
        let c1 = make_bump_c1(&g, [0.5, 0.5], 0.2, -1.0, &op).unwrap();
        assert!(matches!(
            CoefficientField::with_constant_background(&g, 1.0, c1, 0.9, op),
            Err(Error::LowerBound { .. })
        ));
    }

    #[test]
    fn frequency_compatibility() {
        let eta = FrequencySample::new([3.0_f64, -1.5]).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.7), (1.0, 0.2)] {
            assert_eq!(eta.f(x, y, 0.0), eta.phi(x, y));
            assert_eq!(eta.f_t(x, y, 0.0), eta.psi(x, y));
        }
        assert!(matches!(
            FrequencySample::new([0.0_f64, 0.0]),
            Err(Error::ZeroFrequency)
        ));
    }
}
