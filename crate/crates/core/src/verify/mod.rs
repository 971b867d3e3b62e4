//! Numerical certification: integration oracle, residual and error decay
//! fits, γ diagnostics, and parameter counts.

mod checks;
mod decay;
mod integrate;

pub use checks::{
    derivative_consistency, error_check, gamma_first_order, parameter_count, residual,
    ErrorCheck, ErrorCheckOptions, ErrorMode, GammaDiagnostics, LaunchReport, ParamVerdict,
    ParameterCount, ResidualCheck,
};
pub use decay::{fit_decay, geometric_times, DecayReport, FitOptions, WindowSup};
pub use integrate::{dopri5, integrate, Guard, IntegrateOptions, Trajectory};
