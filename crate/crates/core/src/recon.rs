//! Boundary functionals, per-frequency Fourier samples and the inverse
//! Fourier reconstruction of c₁.
//!
//! Sign and scaling. Linearizing `u_α − u ≈ αz` and pairing the null control
//! with `∂ₜz + i|η|z` gives, for the functional
//! `∬_Γ×(0,T) (θ + θ'∂ₜ)(Λ_α − Λ₀)f̃`, the leading term `−α|η|² ∫c₁e^{2iη·x}`
//! in any dimension. [`FunctionalScaling::Linearized`] divides by that factor;
//! [`FunctionalScaling::Literal`] divides by `α^d|η|²` as the identity is
//! usually quoted. Likewise the pairing `∬ g Λ₀(v_η)` equals
//! `−|η|² ∫c₁e^{2iη·x}`; [`prop31_check`] reports the gap against both signs.
//!
//! The inversion sums samples on a symmetric lattice of spacing dη. With
//! `ξ = 2η` and the unitary-free Fourier pair, the constant in front of the
//! Riemann sum is `1/π^d`; [`InversionConstant::Bare`] uses a bare `2`.

use ndarray::Array2;
use rustfft::{FftNum, FftPlanner};

use crate::domain::{integrate_complex, BoundaryPartition, CField, CoefficientField, CutoffField, FrequencySample, GridSpec, RField, Region};
use crate::error::{Error, Result};
use crate::hum::{solve_control, ControlFunction, HumConfig};
use crate::scalar::{cis, czero, Cplx, Real};
use crate::theta::{solve_theta_ode, theta_forcing, time_derivative, ThetaFunction};
use crate::wave::{dtn_difference, solve_veta, trapezoid_weight, BoundaryTrace};

/// Spatial dimension the formulas are evaluated in.
pub const DIM: i32 = 2;

/// `∬_Γ×(0,T) a·b dσ dt` (bilinear, no conjugation), trapezoid in time and
/// arclength weights on Γ.
pub fn pair_traces<T: Real>(
    a: &Array2<Cplx<T>>,
    b: &Array2<Cplx<T>>,
    dt: T,
    partition: &BoundaryPartition<T>,
) -> Result<Cplx<T>> {
    if a.dim() != b.dim() || a.dim().1 != partition.len() {
        return Err(Error::TraceMismatch(format!(
            "shapes {:?} and {:?} over {} samples",
            a.dim(),
            b.dim(),
            partition.len()
        )));
    }
    let steps = a.dim().0;
    let mut acc = czero();
    for n in 0..steps {
        let wt = trapezoid_weight::<T>(n, steps) * dt;
        let mut row = czero();
        for (k, s) in partition.samples().iter().enumerate() {
            row += a[[n, k]] * b[[n, k]] * s.weight;
        }
        acc += row * wt;
    }
    Ok(acc)
}

fn check_dt<T: Real>(a: &BoundaryTrace<T>, b: &BoundaryTrace<T>) -> Result<()> {
    if (a.dt - b.dt).abs() > T::lit(1e-9) * a.dt.abs() {
        return Err(Error::TraceMismatch(format!("time steps {} and {}", a.dt, b.dt)));
    }
    Ok(())
}

/// `∬ [θ·X + θ'·∂ₜX]` with `X` the DtN difference and `∂ₜX` by centered
/// differences.
pub fn functional_theta<T: Real>(
    theta: &ThetaFunction<T>,
    dtn_diff: &BoundaryTrace<T>,
    partition: &BoundaryPartition<T>,
) -> Result<Cplx<T>> {
    check_dt(&theta.theta, dtn_diff)?;
    let x_t = time_derivative(&dtn_diff.values, dtn_diff.dt);
    Ok(pair_traces(&theta.theta.values, &dtn_diff.values, dtn_diff.dt, partition)?
        + pair_traces(&theta.theta_t.values, &x_t, dtn_diff.dt, partition)?)
}

/// Integrated-by-parts form `∬ (θ − θ'')·X`, with `θ''` differenced from θ'.
pub fn functional_ibp<T: Real>(
    theta: &ThetaFunction<T>,
    dtn_diff: &BoundaryTrace<T>,
    partition: &BoundaryPartition<T>,
) -> Result<Cplx<T>> {
    check_dt(&theta.theta, dtn_diff)?;
    let theta_tt = time_derivative(&theta.theta_t.values, theta.theta_t.dt);
    let weight = &theta.theta.values - &theta_tt;
    pair_traces(&weight, &dtn_diff.values, dtn_diff.dt, partition)
}

/// `−∬ (g' − i|η|g)·X`, the same functional written with the control.
pub fn functional_g<T: Real>(
    g: &BoundaryTrace<T>,
    eta: &FrequencySample<T>,
    dtn_diff: &BoundaryTrace<T>,
    partition: &BoundaryPartition<T>,
) -> Result<Cplx<T>> {
    check_dt(g, dtn_diff)?;
    let h = theta_forcing(&g.values, g.dt, eta.abs_eta());
    Ok(-pair_traces(&h, &dtn_diff.values, dtn_diff.dt, partition)?)
}

/// `∫_Ω c₁ e^{2iη·x} dx` by the trapezoid rule on the grid.
pub fn fourier_oracle<T: Real>(grid: &GridSpec<T>, c1: &RField<T>, eta: &FrequencySample<T>) -> Cplx<T> {
    let two = T::lit(2.0);
    let integrand: CField<T> =
        ndarray::Zip::from(&grid.complex_field(|x, y| cis(two * eta.phase(x, y)))).and(c1).map_collect(|&e, &c| e * c);
    integrate_complex(grid, &integrand)
}

/// Both sides of the control/auxiliary-solution pairing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop31Report<T> {
    /// `∬ g Λ₀(v_η)`.
    pub lhs: Cplx<T>,
    /// `|η|² ∫ c₁ e^{2iη·x}`.
    pub rhs: Cplx<T>,
}

impl<T: Real> Prop31Report<T> {
    /// `|lhs − rhs| / |rhs|`, the identity as usually stated.
    pub fn literal_gap(&self) -> T {
        (self.lhs - self.rhs).norm() / self.rhs.norm()
    }
    /// `|lhs + rhs| / |rhs|`, the identity with the sign produced by Green's
    /// formula.
    pub fn derived_gap(&self) -> T {
        (self.lhs + self.rhs).norm() / self.rhs.norm()
    }
}

pub fn prop31_check<T: Real>(
    eta: &FrequencySample<T>,
    coeff: &CoefficientField<T>,
    control: &ControlFunction<T>,
    grid: &GridSpec<T>,
    partition: &BoundaryPartition<T>,
) -> Result<Prop31Report<T>> {
    let aux = solve_veta(eta, coeff, grid, partition)?;
    let lhs = pair_traces(&control.g.values, &aux.values, grid.dt(), partition)?;
    let k2 = eta.abs_eta() * eta.abs_eta();
    let rhs = fourier_oracle(grid, coeff.c1(), eta) * k2;
    Ok(Prop31Report { lhs, rhs })
}

/// How a functional value is turned into an estimate of `∫c₁e^{2iη·x}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FunctionalScaling {
    /// Divide by `−α|η|²`.
    #[default]
    Linearized,
    /// Divide by `α^d|η|²`.
    Literal,
}

impl FunctionalScaling {
    pub fn factor<T: Real>(self, alpha: T, abs_eta: T) -> T {
        let k2 = abs_eta * abs_eta;
        match self {
            FunctionalScaling::Linearized => -alpha * k2,
            FunctionalScaling::Literal => alpha.powi(DIM) * k2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionalScaling::Linearized => "linearized",
            FunctionalScaling::Literal => "literal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linearized" => Some(FunctionalScaling::Linearized),
            "literal" => Some(FunctionalScaling::Literal),
            _ => None,
        }
    }
}

/// Functional form that feeds `f_est`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FunctionalForm {
    #[default]
    Theta,
    Control,
}

impl FunctionalForm {
    pub fn name(self) -> &'static str {
        match self {
            FunctionalForm::Theta => "theta",
            FunctionalForm::Control => "g",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "theta" => Some(FunctionalForm::Theta),
            "g" => Some(FunctionalForm::Control),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig<T> {
    pub hum: HumConfig<T>,
    pub scaling: FunctionalScaling,
    pub form: FunctionalForm,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            hum: HumConfig::default(),
            scaling: FunctionalScaling::default(),
            form: FunctionalForm::default(),
        }
    }
}

/// One lattice entry of the Fourier data.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSample<T> {
    pub eta: [T; 2],
    pub functional_theta: Cplx<T>,
    pub functional_g: Cplx<T>,
    /// Estimate of `∫c₁e^{2iη·x}` from the configured form and scaling.
    pub f_est: Cplx<T>,
    pub certified: bool,
    pub residual_energy: T,
    pub iterations: usize,
    /// Sup norm of the DtN difference.
    pub dtn_sup: T,
}

impl<T: Real> FourierSample<T> {
    pub fn abs_eta(&self) -> T {
        self.eta[0].hypot(self.eta[1])
    }

    /// Relative gap between the θ and g forms.
    pub fn form_gap(&self) -> T {
        let den = self.functional_theta.norm();
        if den == T::zero() {
            return self.functional_g.norm();
        }
        (self.functional_theta - self.functional_g).norm() / den
    }
}

/// Everything one frequency produces on its way to a Fourier sample.
#[derive(Clone, Debug)]
pub struct PipelineOutput<T> {
    pub sample: FourierSample<T>,
    pub control: ControlFunction<T>,
    pub theta: ThetaFunction<T>,
    pub dtn_diff: BoundaryTrace<T>,
}

/// Estimate from functional values, for any scaling.
pub fn scale_functional<T: Real>(value: Cplx<T>, alpha: T, abs_eta: T, scaling: FunctionalScaling) -> Result<Cplx<T>> {
    let factor = scaling.factor(alpha, abs_eta);
    if factor == T::zero() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "the functional cannot be scaled at α = 0".into(),
        });
    }
    Ok(value / factor)
}

/// Runs the pipeline for a precomputed control.
pub fn fourier_sample_with_control<T: Real>(
    eta: &FrequencySample<T>,
    alpha: T,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
    partition: &BoundaryPartition<T>,
    control: ControlFunction<T>,
    cfg: &PipelineConfig<T>,
) -> Result<PipelineOutput<T>> {
    let dtn_diff = dtn_difference(alpha, eta, coeff, grid, partition)?;
    let theta = solve_theta_ode(&control)?;
    let functional_theta = functional_theta(&theta, &dtn_diff, partition)?;
    let functional_g = functional_g(&control.g, eta, &dtn_diff, partition)?;
    let chosen = match cfg.form {
        FunctionalForm::Theta => functional_theta,
        FunctionalForm::Control => functional_g,
    };
    let f_est = scale_functional(chosen, alpha, eta.abs_eta(), cfg.scaling)?;
    let sample = FourierSample {
        eta: eta.eta(),
        functional_theta,
        functional_g,
        f_est,
        certified: control.certified,
        residual_energy: control.residual_energy,
        iterations: control.iterations,
        dtn_sup: dtn_diff.sup_norm(),
    };
    Ok(PipelineOutput {
        sample,
        control,
        theta,
        dtn_diff,
    })
}

/// DtN difference, HUM control, θ and both functionals for one η.
pub fn fourier_sample<T: Real>(
    eta: &FrequencySample<T>,
    alpha: T,
    coeff: &CoefficientField<T>,
    grid: &GridSpec<T>,
    partition: &BoundaryPartition<T>,
    beta: &CutoffField<T>,
    cfg: &PipelineConfig<T>,
) -> Result<PipelineOutput<T>> {
    let control = solve_control(eta, beta, grid, coeff.c0(), partition, &cfg.hum)?;
    fourier_sample_with_control(eta, alpha, coeff, grid, partition, control, cfg)
}

/// Symmetric Cartesian lattice `{m·dη : |m_i| ≤ M}` without the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid<T> {
    eta_max: T,
    d_eta: T,
    m: usize,
    samples: Vec<FrequencySample<T>>,
}

impl<T: Real> FrequencyGrid<T> {
    /// Checks `2η_max < π/h` and that the lattice is non-empty.
    pub fn new(eta_max: T, d_eta: T, grid: &GridSpec<T>) -> Result<Self> {
        if !(d_eta > T::zero()) || !(eta_max >= T::zero()) {
            return Err(Error::Lattice("spacing must be positive and η_max non-negative".into()));
        }
        let m = (eta_max / d_eta + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
        if m == 0 {
            return Err(Error::Lattice("no admissible frequencies".into()));
        }
        let top = d_eta * T::from_usize_lossy(m);
        let nyquist = T::PI() / grid.hx().max(grid.hy());
        if !(T::lit(2.0) * top < nyquist) {
            return Err(Error::Lattice(format!(
                "2·η_max = {} reaches the spatial Nyquist limit {}",
                T::lit(2.0) * top,
                nyquist
            )));
        }
        let mi = m as i64;
        let mut samples = Vec::new();
        for a in -mi..=mi {
            for b in -mi..=mi {
                if a == 0 && b == 0 {
                    continue;
                }
                let eta = [d_eta * T::lit(a as f64), d_eta * T::lit(b as f64)];
                samples.push(FrequencySample::new(eta)?);
            }
        }
        Ok(Self {
            eta_max: top,
            d_eta,
            m,
            samples,
        })
    }

    pub fn eta_max(&self) -> T {
        self.eta_max
    }
    pub fn d_eta(&self) -> T {
        self.d_eta
    }
    /// Lattice half-width in steps.
    pub fn half_width(&self) -> usize {
        self.m
    }
    pub fn samples(&self) -> &[FrequencySample<T>] {
        &self.samples
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Lattice samples of the Fourier data plus the settings that made them.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSampleSet<T> {
    pub samples: Vec<FourierSample<T>>,
    pub d_eta: T,
    pub alpha: T,
    pub scaling: FunctionalScaling,
    pub form: FunctionalForm,
}

impl<T: Real> FourierSampleSet<T> {
    /// Index of the entry at `eta`, up to `1e-6·dη`.
    pub fn find(&self, eta: [T; 2]) -> Option<usize> {
        let tol = self.d_eta * T::lit(1e-6);
        self.samples
            .iter()
            .position(|s| (s.eta[0] - eta[0]).abs() <= tol && (s.eta[1] - eta[1]).abs() <= tol)
    }

    /// `‖F(−η) − conj F(η)‖ / ‖F‖` over the set (ℓ² over entries whose
    /// mirror is present).
    pub fn hermitian_residue(&self) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for s in &self.samples {
            if let Some(j) = self.find([-s.eta[0], -s.eta[1]]) {
                num += (self.samples[j].f_est - s.f_est.conj()).norm_sqr();
                den += s.f_est.norm_sqr();
            }
        }
        if den == T::zero() {
            return T::zero();
        }
        (num / den).sqrt()
    }

    pub fn certified_fraction(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        let ok = self.samples.iter().filter(|s| s.certified).count();
        T::from_usize_lossy(ok) / T::from_usize_lossy(self.samples.len())
    }
}

/// Constant in front of the inversion Riemann sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InversionConstant {
    /// `1/π^d`.
    #[default]
    Derived,
    /// Bare `2`.
    Bare,
}

impl InversionConstant {
    pub fn value<T: Real>(self) -> T {
        match self {
            InversionConstant::Derived => T::one() / T::PI().powi(DIM),
            InversionConstant::Bare => T::lit(2.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult<T> {
    pub c1_est: RField<T>,
    /// `c₀ + α·c1_est`.
    pub calpha_est: RField<T>,
    /// `‖Im‖/‖Re‖` of the raw complex sum.
    pub imag_residue: T,
    pub used: usize,
    /// Lattice points left out (non-certified, or mirror non-certified).
    pub excluded: Vec<[T; 2]>,
    /// Whether the imaginary residue exceeds 5% of the real part.
    pub flagged: bool,
}

/// `c1_est(x) = K Σ_η F(η) e^{−2iη·x} dη²`, real part kept.
pub fn invert_fourier<T: Real>(
    set: &FourierSampleSet<T>,
    grid: &GridSpec<T>,
    c0: &RField<T>,
    constant: InversionConstant,
    include_uncertified: bool,
) -> Result<ReconstructionResult<T>> {
    grid.check_shape("c0", c0)?;
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for s in &set.samples {
        let mirror = set.find([-s.eta[0], -s.eta[1]]).ok_or_else(|| {
            Error::Lattice(format!("lattice is not symmetric: −({}, {}) missing", s.eta[0], s.eta[1]))
        })?;
        let ok = include_uncertified || (s.certified && set.samples[mirror].certified);
        if s.abs_eta() < set.d_eta * T::lit(0.5) || !ok {
            excluded.push(s.eta);
        } else {
            used.push(s);
        }
    }
    if used.is_empty() {
        return Err(Error::Lattice("no admissible frequencies".into()));
    }
    let k = constant.value::<T>() * set.d_eta.powi(DIM);
    let two = T::lit(2.0);
    let (nxp, nyp) = grid.shape();
    // e^{−2iη·x} factorizes over the axes.
    let mut acc = CField::from_elem(grid.shape(), czero());
    for s in &used {
        let ex: Vec<Cplx<T>> = (0..nxp).map(|i| cis(-two * s.eta[0] * grid.x(i))).collect();
        let ey: Vec<Cplx<T>> = (0..nyp).map(|j| cis(-two * s.eta[1] * grid.y(j))).collect();
        let f = s.f_est * k;
        for i in 0..nxp {
            let fx = f * ex[i];
            for j in 0..nyp {
                acc[[i, j]] += fx * ey[j];
            }
        }
    }
    let c1_est = acc.mapv(|v| v.re);
    let re = acc.iter().map(|v| v.re * v.re).sum::<T>().sqrt();
    let im = acc.iter().map(|v| v.im * v.im).sum::<T>().sqrt();
    let imag_residue = if re > T::zero() { im / re } else { im };
    let calpha_est = c0 + &c1_est.mapv(|v| v * set.alpha);
    Ok(ReconstructionResult {
        c1_est,
        calpha_est,
        imag_residue,
        used: used.len(),
        excluded,
        flagged: imag_residue > T::lit(0.05),
    })
}

/// Exact lattice data `∫c₁e^{2iη·x}` by quadrature, bypassing every PDE solve.
pub fn oracle_sample_set<T: Real>(grid: &GridSpec<T>, c1: &RField<T>, lattice: &FrequencyGrid<T>) -> FourierSampleSet<T> {
    let samples = lattice
        .samples()
        .iter()
        .map(|eta| {
            let f = fourier_oracle(grid, c1, eta);
            FourierSample {
                eta: eta.eta(),
                functional_theta: f,
                functional_g: f,
                f_est: f,
                certified: true,
                residual_energy: T::zero(),
                iterations: 0,
                dtn_sup: T::zero(),
            }
        })
        .collect();
    FourierSampleSet {
        samples,
        d_eta: lattice.d_eta(),
        alpha: T::zero(),
        scaling: FunctionalScaling::Linearized,
        form: FunctionalForm::Theta,
    }
}

/// The part of `c₁` the lattice can represent: `c₁` extended by zero to the
/// periodic box of side `π/dη`, Fourier modes `|m_i| ≤ M` kept and the mean
/// removed. Computed with FFTs, independently of [`invert_fourier`].
pub fn band_limited_projection<T: Real + FftNum>(
    grid: &GridSpec<T>,
    c1: &RField<T>,
    lattice: &FrequencyGrid<T>,
) -> Result<RField<T>> {
    grid.check_shape("c1", c1)?;
    let period = T::PI() / lattice.d_eta();
    let cells = |h: T, l: T| -> Result<usize> {
        let n = (period / h).round();
        if (n * h - period).abs() > T::lit(1e-6) * period {
            return Err(Error::Lattice(format!(
                "periodic box {period} is not a whole number of cells of width {h}"
            )));
        }
        if period < l {
            return Err(Error::Lattice(format!("periodic box {period} is smaller than the domain {l}")));
        }
        Ok(n.to_usize().unwrap_or(0))
    };
    let nbx = cells(grid.hx(), grid.lx())?;
    let nby = cells(grid.hy(), grid.ly())?;
    let m = lattice.half_width();
    if 2 * m >= nbx.min(nby) {
        return Err(Error::Lattice("lattice exceeds the box resolution".into()));
    }
    let (nxp, nyp) = grid.shape();
    let mut buf = Array2::from_elem((nbx, nby), czero::<T>());
    for i in 0..nxp.min(nbx) {
        for j in 0..nyp.min(nby) {
            buf[[i, j]] = Cplx::new(c1[[i, j]], T::zero());
        }
    }
    let mut planner = FftPlanner::<T>::new();
    fft2(&mut buf, &mut planner, false);
    let signed = |k: usize, n: usize| -> i64 {
        if k <= n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    };
    let mi = m as i64;
    for ((a, b), v) in buf.indexed_iter_mut() {
        let (ka, kb) = (signed(a, nbx), signed(b, nby));
        if ka.abs() > mi || kb.abs() > mi || (ka == 0 && kb == 0) {
            *v = czero();
        }
    }
    fft2(&mut buf, &mut planner, true);
    let norm = T::from_usize_lossy(nbx * nby);
    Ok(RField::from_shape_fn(grid.shape(), |(i, j)| buf[[i, j]].re / norm))
}

fn fft2<T: Real + FftNum>(buf: &mut Array2<Cplx<T>>, planner: &mut FftPlanner<T>, inverse: bool) {
    let (n0, n1) = buf.dim();
    let plan = |n: usize, p: &mut FftPlanner<T>| if inverse { p.plan_fft_inverse(n) } else { p.plan_fft_forward(n) };
    let f1 = plan(n1, planner);
    for mut row in buf.outer_iter_mut() {
        let mut v = row.to_vec();
        f1.process(&mut v);
        row.assign(&ndarray::Array1::from(v));
    }
    let f0 = plan(n0, planner);
    for mut col in buf.columns_mut() {
        let mut v = col.to_vec();
        f0.process(&mut v);
        col.assign(&ndarray::Array1::from(v));
    }
}

/// Relative discrete L² distance over the nodes of `region`.
pub fn rel_l2_on<T: Real>(grid: &GridSpec<T>, a: &RField<T>, reference: &RField<T>, region: &Region<T>) -> T {
    let mut num = T::zero();
    let mut den = T::zero();
    for ((i, j), &r) in reference.indexed_iter() {
        if region.contains(grid.x(i), grid.y(j)) {
            num += (a[[i, j]] - r) * (a[[i, j]] - r);
            den += r * r;
        }
    }
    if den == T::zero() {
        return num.sqrt();
    }
    (num / den).sqrt()
}

/// Error metrics of a reconstruction against known ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconMetrics<T> {
    /// Relative L²(Ω′) error against the band-limited, mean-free reference.
    pub rel_l2_band_limited: T,
    /// Relative L²(Ω′) error against c₁ itself.
    pub rel_l2_truth: T,
    pub imag_residue: T,
    pub hermitian_residue: T,
    pub used: usize,
    pub excluded: usize,
}

pub fn reconstruction_metrics<T: Real + FftNum>(
    result: &ReconstructionResult<T>,
    set: &FourierSampleSet<T>,
    grid: &GridSpec<T>,
    c1_true: &RField<T>,
    omega_prime: &Region<T>,
    lattice: &FrequencyGrid<T>,
) -> Result<ReconMetrics<T>> {
    let reference = band_limited_projection(grid, c1_true, lattice)?;
    Ok(ReconMetrics {
        rel_l2_band_limited: rel_l2_on(grid, &result.c1_est, &reference, omega_prime),
        rel_l2_truth: rel_l2_on(grid, &result.c1_est, c1_true, omega_prime),
        imag_residue: result.imag_residue,
        hermitian_residue: set.hermitian_residue(),
        used: result.used,
        excluded: result.excluded.len(),
    })
}
