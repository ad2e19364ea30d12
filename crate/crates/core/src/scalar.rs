//! Scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, RemAssign, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point type the numerics are written against (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + RemAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every finite `f64` maps into `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex value over the crate scalar.
pub type Cplx<T> = Complex<T>;

/// `e^{i x}` for real `x`.
#[inline]
pub fn cis<T: Real>(x: T) -> Cplx<T> {
    Complex::new(x.cos(), x.sin())
}

#[inline]
pub(crate) fn czero<T: Real>() -> Cplx<T> {
    Complex::new(T::zero(), T::zero())
}

/// Relative difference `|a - b| / |b|`, with `|a|` returned when `b` vanishes.
pub fn rel_diff<T: Real>(a: Cplx<T>, b: Cplx<T>) -> T {
    let nb = b.norm();
    if nb == T::zero() {
        a.norm()
    } else {
        (a - b).norm() / nb
    }
}
