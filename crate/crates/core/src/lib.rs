//! Identification of a wave-speed perturbation from partial
//! Dirichlet-to-Neumann data.
//!
//! The pipeline, per frequency η:
//!
//! 1. [`wave::dtn_difference`] synthesizes `(Λ_α − Λ₀)(f̃)` on the observed
//!    boundary patch Γ for plane-wave data `e^{iη·x − i|η|t}`;
//! 2. [`hum::solve_control`] builds the null control `g_η` driving
//!    `(βe^{iη·x}, 0)` to rest by the Hilbert Uniqueness Method;
//! 3. [`theta::solve_theta_ode`] turns `g_η` into the weight `θ_η`;
//! 4. [`recon::fourier_sample`] evaluates the boundary functional and
//!    divides out the known factors, and [`recon::invert_fourier`] sums
//!    the samples back into a coefficient image.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

pub mod container;
pub mod domain;
pub mod error;
pub mod hum;
pub mod recon;
pub mod scalar;
pub mod theta;
pub mod wave;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub type GridSpec64 = domain::GridSpec<f64>;
pub type GridConfig64 = domain::GridConfig<f64>;
pub type BoundaryPartition64 = domain::BoundaryPartition<f64>;
pub type CoefficientField64 = domain::CoefficientField<f64>;
pub type CutoffField64 = domain::CutoffField<f64>;
pub type FrequencySample64 = domain::FrequencySample<f64>;
pub type BoundaryTrace64 = wave::BoundaryTrace<f64>;
pub type WaveMovie64 = wave::WaveMovie<f64>;
pub type HumConfig64 = hum::HumConfig<f64>;
pub type ControlFunction64 = hum::ControlFunction<f64>;
pub type ThetaFunction64 = theta::ThetaFunction<f64>;
pub type FourierSample64 = recon::FourierSample<f64>;
pub type FourierSampleSet64 = recon::FourierSampleSet<f64>;
pub type ReconstructionResult64 = recon::ReconstructionResult<f64>;
