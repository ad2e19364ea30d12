//! The weight θ_η on Γ × (0,T).
//!
//! θ solves `θ'' − θ = h`, `θ(0) = 0`, `θ'(T) = 0` with
//! `h = e^{i|η|t} ∂ₜ(e^{−i|η|t} g) = g' − i|η|g`, pointwise on Γ. The production
//! path inverts this two-point problem with its exact Green's function; the
//! equivalent Volterra form
//!
//! ```text
//! θ'(t) + ∫ₜᵀ e^{−i|η|(s−t)} (θ(s) − i|η|θ'(s)) ds = g(t),   θ(0) = 0
//! ```
//!
//! is kept as an independent oracle.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::domain::FrequencySample;
use crate::error::{Error, Result};
use crate::hum::ControlFunction;
use crate::scalar::{cis, czero, Cplx, Real};
use crate::wave::{BoundaryTrace, Quantity};

/// How a [`ThetaFunction`] was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaMethod {
    Green,
    VolterraFixedPoint,
    VolterraDense,
}

#[derive(Clone, Debug)]
pub struct ThetaFunction<T> {
    pub theta: BoundaryTrace<T>,
    pub theta_t: BoundaryTrace<T>,
    pub eta: FrequencySample<T>,
    pub method: ThetaMethod,
}

/// Second-order derivative along the time axis: centered inside, three-point
/// one-sided at both ends.
pub fn time_derivative<T: Real>(values: &Array2<Cplx<T>>, dt: T) -> Array2<Cplx<T>> {
    let (nt1, ns) = values.dim();
    let mut out = Array2::from_elem((nt1, ns), czero());
    if nt1 < 3 {
        return out;
    }
    let two_dt = T::lit(2.0) * dt;
    let (three, four) = (T::lit(3.0), T::lit(4.0));
    let last = nt1 - 1;
    for k in 0..ns {
        out[[0, k]] = (values[[0, k]] * -three + values[[1, k]] * four - values[[2, k]]) / two_dt;
        for n in 1..last {
            out[[n, k]] = (values[[n + 1, k]] - values[[n - 1, k]]) / two_dt;
        }
        out[[last, k]] =
            (values[[last, k]] * three - values[[last - 1, k]] * four + values[[last - 2, k]]) / two_dt;
    }
    out
}

/// Right side `h = g' − i|η|g` of the θ equation.
pub fn theta_forcing<T: Real>(g: &Array2<Cplx<T>>, dt: T, abs_eta: T) -> Array2<Cplx<T>> {
    let mut h = time_derivative(g, dt);
    let ik = Cplx::new(T::zero(), abs_eta);
    h.zip_mut_with(g, |hv, &gv| *hv -= ik * gv);
    h
}

fn check_time_grid<T: Real>(g: &BoundaryTrace<T>) -> Result<()> {
    if g.steps() < 3 {
        return Err(Error::Shape {
            what: "control time axis",
            expected: vec![3],
            got: vec![g.steps()],
        });
    }
    if !(g.dt > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "trace time step must be positive".into(),
        });
    }
    Ok(())
}

/// Green's-function solve of `θ'' − θ = h` with `θ(0) = 0`, `θ'(T) = 0` for one
/// Γ sample; `h` on the uniform grid `t_n = n dt`.
///
/// With `A(t) = ∫₀ᵗ sinh(s) h(s) ds` and `B(t) = ∫ₜᵀ cosh(T−s) h(s) ds`,
/// `θ = −(cosh(T−t) A + sinh(t) B)/cosh T` and
/// `θ' = (sinh(T−t) A − cosh(t) B)/cosh T`.
pub fn green_solve<T: Real>(h: ArrayView1<'_, Cplx<T>>, dt: T) -> (Array1<Cplx<T>>, Array1<Cplx<T>>) {
    let n = h.len();
    let t_final = dt * T::from_usize_lossy(n - 1);
    let half = T::lit(0.5) * dt;
    let time = |k: usize| dt * T::from_usize_lossy(k);
    let mut a = vec![czero::<T>(); n];
    for k in 1..n {
        let (t0, t1) = (time(k - 1), time(k));
        a[k] = a[k - 1] + (h[k - 1] * t0.sinh() + h[k] * t1.sinh()) * half;
    }
    let mut b = vec![czero::<T>(); n];
    for k in (0..n - 1).rev() {
        let (t0, t1) = (time(k), time(k + 1));
        b[k] = b[k + 1] + (h[k] * (t_final - t0).cosh() + h[k + 1] * (t_final - t1).cosh()) * half;
    }
    let ch = t_final.cosh();
    let mut theta = Array1::from_elem(n, czero());
    let mut theta_t = Array1::from_elem(n, czero());
    for k in 0..n {
        let t = time(k);
        theta[k] = -(a[k] * (t_final - t).cosh() + b[k] * t.sinh()) / ch;
        theta_t[k] = (a[k] * (t_final - t).sinh() - b[k] * t.cosh()) / ch;
    }
    // Imposed exactly; the formulas give them up to rounding.
    theta[0] = czero();
    theta_t[n - 1] = czero();
    (theta, theta_t)
}

/// θ from a control trace `g` sampled on `(nt+1) × nΓ`.
pub fn theta_from_trace<T: Real>(g: &BoundaryTrace<T>, eta: &FrequencySample<T>) -> Result<ThetaFunction<T>> {
    check_time_grid(g)?;
    let h = theta_forcing(&g.values, g.dt, eta.abs_eta());
    let mut theta = BoundaryTrace::zeros(g.steps(), g.samples(), g.dt, Quantity::Theta);
    let mut theta_t = BoundaryTrace::zeros(g.steps(), g.samples(), g.dt, Quantity::ThetaT);
    for k in 0..g.samples() {
        let (th, tht) = green_solve(h.column(k), g.dt);
        theta.values.column_mut(k).assign(&th);
        theta_t.values.column_mut(k).assign(&tht);
    }
    theta.eta = Some(eta.eta());
    theta_t.eta = Some(eta.eta());
    Ok(ThetaFunction {
        theta,
        theta_t,
        eta: *eta,
        method: ThetaMethod::Green,
    })
}

/// Production θ solve for a HUM control.
pub fn solve_theta_ode<T: Real>(control: &ControlFunction<T>) -> Result<ThetaFunction<T>> {
    theta_from_trace(&control.g, &control.eta)
}

/// Discrete residual `θ'' − θ − h` (centered second difference at interior
/// steps) for every sample.
pub fn ode_residual<T: Real>(theta: &ThetaFunction<T>, g: &BoundaryTrace<T>) -> Array2<Cplx<T>> {
    let h = theta_forcing(&g.values, g.dt, theta.eta.abs_eta());
    let th = &theta.theta.values;
    let (nt1, ns) = th.dim();
    let idt2 = T::one() / (g.dt * g.dt);
    let two = T::lit(2.0);
    let mut r = Array2::from_elem((nt1.saturating_sub(2), ns), czero());
    for n in 1..nt1 - 1 {
        for k in 0..ns {
            let d2 = (th[[n + 1, k]] - th[[n, k]] * two + th[[n - 1, k]]) * idt2;
            r[[n - 1, k]] = d2 - th[[n, k]] - h[[n, k]];
        }
    }
    r
}

/// Dense Volterra operator acting on `p = θ'` (θ recovered by cumulative
/// trapezoid): row `n` is `p_n + Σ_{m ≥ n} ω_m e^{−ik(t_m − t_n)} (θ_m − ik p_m)`.
fn volterra_matrix(n: usize, dt: f64, k: f64) -> DMatrix<Complex64> {
    let ik = Complex64::new(0.0, k);
    let half = 0.5 * dt;
    // θ = C p
    let c = |row: usize, col: usize| -> f64 {
        if row == 0 || col > row {
            0.0
        } else if col == 0 || col == row {
            half
        } else {
            dt
        }
    };
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for row in 0..n {
        a[(row, row)] += Complex64::new(1.0, 0.0);
        for m in row..n {
            let w = if row == n - 1 {
                0.0
            } else if m == row || m == n - 1 {
                half
            } else {
                dt
            };
            if w == 0.0 {
                continue;
            }
            let kern = Complex64::from_polar(w, -k * dt * (m - row) as f64);
            // kern·(θ_m − ik p_m) with θ_m = Σ_j C[m, j] p_j
            for j in 0..=m {
                let cmj = c(m, j);
                if cmj != 0.0 {
                    a[(row, j)] += kern * cmj;
                }
            }
            a[(row, m)] -= kern * ik;
        }
    }
    a
}

/// Lipschitz bound of the Volterra memory term in the sup norm; the Picard
/// iteration contracts when it is below one.
fn picard_bound(t_final: f64, k: f64) -> f64 {
    t_final * (t_final + k)
}

fn volterra_apply_memory(p: &[Complex64], dt: f64, k: f64) -> Vec<Complex64> {
    let n = p.len();
    let ik = Complex64::new(0.0, k);
    let mut theta = vec![Complex64::new(0.0, 0.0); n];
    for m in 1..n {
        theta[m] = theta[m - 1] + (p[m - 1] + p[m]) * (0.5 * dt);
    }
    // M_n = ∫_{t_n}^T e^{−ik(s−t_n)} φ(s) ds by a backward trapezoid recursion.
    let phi: Vec<Complex64> = (0..n).map(|m| theta[m] - ik * p[m]).collect();
    let step = Complex64::from_polar(1.0, -k * dt);
    let mut mem = vec![Complex64::new(0.0, 0.0); n];
    for m in (0..n - 1).rev() {
        mem[m] = (mem[m + 1] + phi[m + 1] * (0.5 * dt)) * step + phi[m] * (0.5 * dt);
    }
    mem
}

/// θ from the Volterra form. Uses Picard iteration when it provably
/// contracts, otherwise one dense LU factorization shared by all samples.
pub fn solve_theta_volterra_trace<T: Real>(
    g: &BoundaryTrace<T>,
    eta: &FrequencySample<T>,
) -> Result<ThetaFunction<T>> {
    check_time_grid(g)?;
    let n = g.steps();
    let dt = g.dt.as_f64();
    let k = eta.abs_eta().as_f64();
    let t_final = dt * (n - 1) as f64;
    let to64 = |v: Cplx<T>| Complex64::new(v.re.as_f64(), v.im.as_f64());
    let from64 = |v: Complex64| Cplx::new(T::lit(v.re), T::lit(v.im));

    let mut theta = BoundaryTrace::zeros(n, g.samples(), g.dt, Quantity::Theta);
    let mut theta_t = BoundaryTrace::zeros(n, g.samples(), g.dt, Quantity::ThetaT);
    theta.eta = Some(eta.eta());
    theta_t.eta = Some(eta.eta());

    let mut finish = |col: usize, p: &[Complex64]| {
        let mut th = Complex64::new(0.0, 0.0);
        for m in 0..n {
            if m > 0 {
                th += (p[m - 1] + p[m]) * (0.5 * dt);
            }
            theta.values[[m, col]] = from64(th);
            theta_t.values[[m, col]] = from64(p[m]);
        }
    };

    let method = if picard_bound(t_final, k) < 0.5 {
        for col in 0..g.samples() {
            let rhs: Vec<Complex64> = g.values.column(col).iter().map(|&v| to64(v)).collect();
            let mut p = rhs.clone();
            for _ in 0..200 {
                let mem = volterra_apply_memory(&p, dt, k);
                let next: Vec<Complex64> = rhs.iter().zip(&mem).map(|(r, m)| r - m).collect();
                let change = next.iter().zip(&p).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                let scale = next.iter().map(|a| a.norm()).fold(0.0, f64::max);
                p = next;
                if change <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                    break;
                }
            }
            finish(col, &p);
        }
        ThetaMethod::VolterraFixedPoint
    } else {
        let lu = volterra_matrix(n, dt, k).lu();
        let rhs = DMatrix::from_fn(n, g.samples(), |r, c| to64(g.values[[r, c]]));
        let sol = lu.solve(&rhs).ok_or_else(|| Error::InvalidParameter {
            name: "dt",
            reason: "Volterra system is singular at this time step".into(),
        })?;
        for col in 0..g.samples() {
            let p: Vec<Complex64> = sol.column(col).iter().copied().collect();
            finish(col, &p);
        }
        ThetaMethod::VolterraDense
    };
    Ok(ThetaFunction {
        theta,
        theta_t,
        eta: *eta,
        method,
    })
}

pub fn solve_theta_volterra<T: Real>(control: &ControlFunction<T>) -> Result<ThetaFunction<T>> {
    solve_theta_volterra_trace(&control.g, &control.eta)
}

/// Kernel `e^{−i|η|(s−t)}` of the Volterra memory term.
pub fn volterra_kernel<T: Real>(abs_eta: T, s: T, t: T) -> Cplx<T> {
    cis(-abs_eta * (s - t))
}

/// Relative discrete L² distance between two θ solutions (both θ and θ').
pub fn theta_rel_l2<T: Real>(a: &ThetaFunction<T>, b: &ThetaFunction<T>) -> T {
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in a
        .theta
        .values
        .iter()
        .zip(b.theta.values.iter())
        .chain(a.theta_t.values.iter().zip(b.theta_t.values.iter()))
    {
        num += (*x - *y).norm_sqr();
        den += y.norm_sqr();
    }
    if den == T::zero() {
        return num.sqrt();
    }
    (num / den).sqrt()
}
