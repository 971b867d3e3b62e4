//! Crate-wide error type.
//!
//! Diagnostics are carried as `f64` regardless of the working scalar so the
//! error type stays non-generic.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("operands use different generator bases")]
    BasisMismatch,

    #[error("generator {index} is not purely oscillatory or purely decaying (re={re}, im={im})")]
    InvalidGenerator { index: usize, re: f64, im: f64 },

    #[error("generators {first} and {second} coincide")]
    DuplicateGenerator { first: usize, second: usize },

    #[error("frequency vector has {got} entries, basis has {expected} generators")]
    FreqVectorLength { expected: usize, got: usize },

    #[error("negative coefficient {coefficient} on nonnegative-lattice generator {generator}")]
    LatticeViolation { generator: usize, coefficient: i64 },

    #[error(
        "resonance: exponent {exp_re}+{exp_im}i is within {distance} of eigenvalue {lambda_re}+{lambda_im}i (minimum {delta_min})"
    )]
    Resonance {
        exp_re: f64,
        exp_im: f64,
        lambda_re: f64,
        lambda_im: f64,
        distance: f64,
        delta_min: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular or numerically rank-deficient at pivot {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("QR iteration failed to converge after {iterations} sweeps")]
    SchurNoConvergence { iterations: usize },

    #[error("matrix is defective or nearly so: eigenvalue separation {separation} too small for eigenvector extraction")]
    DefectiveMatrix { separation: f64 },

    #[error("eigenvector matrix is ill-conditioned: cond = {cond:e}")]
    IllConditionedEigenvectors { cond: f64 },

    #[error("evaluation point t = {t} is outside the log-tower domain (needs t > {needed})")]
    DomainViolation { t: f64, needed: f64 },

    #[error("power-log base must have a positive power of 1/t (got t-exponent {t_exp})")]
    NonVanishingEps { t_exp: String },

    #[error("rank of eps[{index}] breaks the required ordering: {rank} < {previous}")]
    RankOrdering {
        index: usize,
        rank: String,
        previous: String,
    },

    #[error("rank must be positive, got {rank}")]
    NonPositiveRank { rank: String },

    #[error("monomial has all exponents zero")]
    EmptyMonomial,

    #[error("monomial references eps index {index}, only {available} declared")]
    UnknownEpsIndex { index: usize, available: usize },

    #[error("truncation depth {requested} exceeds the built depth {built}")]
    DepthExceeded { requested: usize, built: usize },

    #[error("series power requires a zero zeroth term")]
    NonzeroZerothTerm,

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("trajectory left the domain ball at t = {t} (distance {distance} > radius {radius})")]
    LeftDomain { t: f64, distance: f64, radius: f64 },

    #[error("spectrum violates the {mode} precondition: {detail}")]
    SpectrumPrecondition { mode: &'static str, detail: String },

    #[error("varpi = {varpi} is out of range: {detail}")]
    VarpiOutOfRange { varpi: f64, detail: String },

    #[error("solving coefficient (s={s}, p={p}): {source}")]
    ExpansionSolveFailed {
        s: usize,
        p: usize,
        source: Box<Error>,
    },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
