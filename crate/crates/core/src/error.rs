use thiserror::Error;

/// Errors raised by grid construction, solvers and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("CFL violation: dt = {dt:.6e} exceeds admissible maximum {dt_max:.6e}")]
    Cfl { dt: f64, dt_max: f64 },

    #[error("inconsistent grid: {0}")]
    GridConsistency(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch for {what}: expected {expected:?}, got {got:?}")]
    Shape {
        what: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("incompatible data: boundary datum differs from initial value by {mismatch:.3e} at t = 0")]
    IncompatibleData { mismatch: f64 },

    #[error("traces do not share a grid: {0}")]
    TraceMismatch(String),

    #[error("support violation: {0}")]
    Support(String),

    #[error("coefficient bound violated: min c_alpha = {min:.6e} < c_* = {c_star:.6e}")]
    LowerBound { min: f64, c_star: f64 },

    #[error("frequency must be nonzero")]
    ZeroFrequency,

    #[error("frequency lattice: {0}")]
    Lattice(String),

    #[error("container format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
