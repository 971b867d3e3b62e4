//! Numeric tolerances used across the crate.
//!
//! All are stated for `f64` headroom and converted into the working scalar at
//! the point of use.

/// Coefficients with modulus below this are pruned from exponential sums.
/// Keeps exact cancellations from leaving dust terms behind.
pub const TAU_ZERO: f64 = 1e-13;

/// A reconstructed substitution residual (coefficient-wise) above this fails
/// the solve certificate.
pub const TAU_RESIDUAL: f64 = 1e-10;

/// Default minimum admissible distance between a forcing exponent and an
/// eigenvalue; solves closer than this are rejected as resonant.
pub const DELTA_MIN: f64 = 1e-6;

/// Slack allowed on fitted log-log slopes. Slowly varying log factors make
/// exact slopes unattainable at finite t.
pub const SLOPE_TOL: f64 = 0.15;

/// Allowed growth ratio between consecutive window sups of a normalized
/// quantity that the theory claims bounded.
pub const RATIO_TOL: f64 = 1.25;

/// Minimum number of geometric windows for a decay fit.
pub const MIN_WINDOWS: usize = 8;

/// Eigenvector matrices with 1-norm condition number above this are rejected.
pub const COND_LIMIT: f64 = 1e8;

/// Divergence classifier threshold: a running integral counts as "→ +∞" once
/// it exceeds this and keeps increasing over the last three grid points.
pub const DIVERGENCE_THRESHOLD: f64 = 50.0;
