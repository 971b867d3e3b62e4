//! Construction and verification of formal asymptotic particular solutions of
//! quasilinear ODE systems
//!
//! ```text
//!     dy/dt = A y + f(t) + Σ_l ε_l(t) f_l(t, y)
//! ```
//!
//! where `f` and the coefficients of the polynomial nonlinearities `f_l` are
//! finite exponential sums on an exact frequency lattice (periodic, uniform
//! almost-periodic, or decaying-exponential families), and the `ε_l(t)` are
//! vanishing power-log functions carrying a positive rational rank.
//!
//! The crate has four layers:
//!
//! - [`osc`] — the closed algebra of exponential sums: ring operations,
//!   differentiation, mean value, and resonance-free linear solves.
//! - [`ranks`] (with [`powerlog`]) — exact bookkeeping of the `ε_l`, their
//!   derivatives, and the rank-graded monomials `ν_sp` the expansion is
//!   ordered by.
//! - [`expansion`] — the recursion producing the coefficients `φ_sp` of the
//!   series `y ≈ φ₀ + Σ ν_sp(t) φ_sp(t)` rank by rank.
//! - [`verify`] — an adaptive RK5(4) integrator, residual/error sampling, and
//!   log-log decay-rate fits certifying the claimed orders numerically.
//!
//! Scalar computations are generic over [`Real`] (`f32` or `f64`); rank and
//! power-log arithmetic is exact rational throughout. Concrete `f64` aliases
//! for the main types live at the crate root.

use std::fmt;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub mod consts;
pub mod error;
pub mod expansion;
pub mod linalg;
pub mod osc;
pub mod powerlog;
pub mod ranks;
pub mod verify;

pub use error::{Error, Result};

/// Floating-point scalar the engine is generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from `f64` (tolerances, literals).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert into the working scalar")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}

pub type OscFn64 = osc::OscFn<f64>;
pub type OscVector64 = osc::OscVector<f64>;
pub type OscMatrix64 = osc::OscMatrix<f64>;
pub type Problem64 = expansion::Problem<f64>;
pub type ExpansionResult64 = expansion::ExpansionResult<f64>;
pub type Trajectory64 = verify::Trajectory<f64>;
pub type DecayReport64 = verify::DecayReport<f64>;

pub type OscFn32 = osc::OscFn<f32>;
pub type OscVector32 = osc::OscVector<f32>;
pub type Problem32 = expansion::Problem<f32>;
