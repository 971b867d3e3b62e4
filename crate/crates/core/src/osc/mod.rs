//! Exact closed algebra of exponential-trigonometric sums with
//! differentiation, mean value, and resonance-free linear solves.

mod basis;
mod func;
mod matrix;
mod solve;

pub use basis::{Basis, FreqVector, Generator, GeneratorBasis};
pub use func::{CompiledOscFn, OscFn};
pub use matrix::{OscMatrix, OscVector};
pub use solve::{
    separation_check, separation_check_fns, separation_check_lattice, solve_scalar_linear,
    solve_system_linear, spectrum, spectrum_differences, SeparationReport, SystemSolve,
};
