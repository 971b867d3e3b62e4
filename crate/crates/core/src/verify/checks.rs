//! Numerical certification of the asymptotic claims: residual decay of the
//! truncated sum, error decay of integrated solutions against it, first-order
//! diagonal means after conjugation by the eigenvector matrix, and the
//! parameter-count conditions.

use num_complex::Complex;
use num_rational::BigRational;

use super::decay::{fit_decay, geometric_times, DecayReport, FitOptions};
use super::integrate::{integrate, Guard, IntegrateOptions};
use crate::consts::{COND_LIMIT, DIVERGENCE_THRESHOLD};
use crate::error::{Error, Result};
use crate::expansion::{ExpansionResult, Problem};
use crate::linalg::{eigen_decompose, CMat};
use crate::powerlog::rational_to;
use crate::ranks::leading_ranks;
use crate::Real;

/// Sampled residual of the truncated sum, with its decay verdict.
#[derive(Debug, Clone)]
pub struct ResidualCheck<T: Real> {
    /// `(t, g(t) components, ‖g(t)‖)`.
    pub samples: Vec<(T, Vec<T>, T)>,
    pub claimed_q: T,
    pub report: DecayReport<T>,
}

/// Residual `g(t) = -s'(t) + A s(t) + f(t) + Σ ε_l f_l(t, s(t))` of the
/// depth-`k` truncation, evaluated from the exact symbolic series (no numeric
/// differentiation) and fitted against `ε₁^{ρ_{k+1}/ϱ₁}`.
pub fn residual<T: Real>(
    p: &Problem<T>,
    e: &ExpansionResult<T>,
    k: usize,
    t_samples: &[T],
    fit: &FitOptions<T>,
) -> Result<ResidualCheck<T>> {
    let series = crate::expansion::residual_series(p, e, k)?;
    let ranks = leading_ranks(&p.eps, k + 1);
    let claimed_q = rational_to::<T>(&(&ranks[k] / p.eps.min_rank()));

    let mut samples = Vec::with_capacity(t_samples.len());
    let mut norms = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let g = series.evaluate_real(&p.eps, t)?;
        let norm = g.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        norms.push((t, norm));
        samples.push((t, g, norm));
    }
    let report = fit_decay(&norms, &p.eps.specs()[0], claimed_q, fit)?;
    Ok(ResidualCheck {
        samples,
        claimed_q,
        report,
    })
}

/// Which asymptotic-character theorem an error check runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    /// No purely imaginary eigenvalues; error exponent `ρ_{k+1}/ϱ₁`.
    Npi,
    /// Simple eigenvalues with a summability exponent `ϖ`; error exponent
    /// `ρ_{k+1}/ϱ₁ - ϖ`, or `ρ_{k₀+1}/ϱ₁` against a display truncated at
    /// `k₀` (when `ρ_{k+1} ≥ ρ_{k₀+1} + ϖϱ₁`).
    Simple,
}

#[derive(Debug, Clone)]
pub struct ErrorCheckOptions<T: Real> {
    pub mode: ErrorMode,
    /// Required in simple mode; exact rational.
    pub varpi: Option<BigRational>,
    /// Truncation depth of the displayed sum `s(t)`; defaults to `k`.
    pub display_depth: Option<usize>,
    pub launch_times: Vec<T>,
    pub t_max: T,
    pub rtol: T,
    pub atol: T,
    /// Fits start at `fit_start_factor · launch_time` so the launch transient
    /// stays out of the windows.
    pub fit_start_factor: T,
    pub samples: usize,
    pub fit: FitOptions<T>,
}

impl<T: Real> ErrorCheckOptions<T> {
    pub fn npi(t0: T, t_max: T) -> Self {
        Self {
            mode: ErrorMode::Npi,
            varpi: None,
            display_depth: None,
            launch_times: vec![t0],
            t_max,
            rtol: T::of(1e-10),
            atol: T::of(1e-12),
            fit_start_factor: T::of(3.0),
            samples: 168,
            fit: FitOptions::default(),
        }
    }

    pub fn simple(t0: T, t_max: T, varpi: BigRational, display_depth: Option<usize>) -> Self {
        Self {
            mode: ErrorMode::Simple,
            varpi: Some(varpi),
            display_depth,
            ..Self::npi(t0, t_max)
        }
    }
}

/// One launch: trajectory error against the displayed truncation.
#[derive(Debug, Clone)]
pub struct LaunchReport<T: Real> {
    pub launch_time: T,
    /// `(t, ‖y(t) - s(t)‖)` on the fit window.
    pub samples: Vec<(T, T)>,
    pub report: DecayReport<T>,
    pub steps_accepted: usize,
}

#[derive(Debug, Clone)]
pub struct ErrorCheck<T: Real> {
    pub claimed_q: T,
    pub launches: Vec<LaunchReport<T>>,
}

impl<T: Real> ErrorCheck<T> {
    pub fn pass(&self) -> bool {
        self.launches.iter().all(|l| l.report.pass)
    }
}

/// Integrate the full system from `y0 = s_k(t₀')`, compare against the
/// displayed truncation, and fit the error decay at the mode's exponent.
pub fn error_check<T: Real>(
    p: &Problem<T>,
    e: &ExpansionResult<T>,
    k: usize,
    opts: &ErrorCheckOptions<T>,
) -> Result<ErrorCheck<T>> {
    let lambdas = crate::osc::spectrum(&p.a)?;
    let ranks = leading_ranks(&p.eps, k + 1);
    let rho1 = p.eps.min_rank().clone();
    let rho_next = &ranks[k];

    let display_depth = opts.display_depth.unwrap_or(k);
    let claimed_q: BigRational = match opts.mode {
        ErrorMode::Npi => {
            for l in &lambdas {
                if l.re.abs() <= T::of(1e-9) {
                    return Err(Error::SpectrumPrecondition {
                        mode: "NPI",
                        detail: format!("eigenvalue {l:?} is purely imaginary"),
                    });
                }
            }
            rho_next / &rho1
        }
        ErrorMode::Simple => {
            check_simple_spectrum(&lambdas)?;
            let varpi = opts.varpi.clone().ok_or_else(|| Error::InvalidProblem(
                "simple mode requires varpi".into(),
            ))?;
            if rho_next <= &(&rho1 * &varpi) {
                return Err(Error::VarpiOutOfRange {
                    varpi: rational_to::<f64>(&varpi),
                    detail: format!("needs rho_(k+1) > varpi*rho_1, got {rho_next}"),
                });
            }
            let two_varpi_minus_one =
                &varpi * BigRational::from_integer(2.into()) - BigRational::from_integer(1.into());
            if rho_next < &(&rho1 * &two_varpi_minus_one) {
                return Err(Error::VarpiOutOfRange {
                    varpi: rational_to::<f64>(&varpi),
                    detail: format!("needs rho_(k+1) >= rho_1(2*varpi - 1), got {rho_next}"),
                });
            }
            if display_depth < k {
                // Deeper build displayed shallow: O(ε₁^{ρ_{k₀+1}/ϱ₁}) needs
                // ρ_{k+1} ≥ ρ_{k₀+1} + ϖϱ₁.
                let rho_disp_next = &ranks[display_depth];
                let need = rho_disp_next + &rho1 * &varpi;
                if rho_next < &need {
                    return Err(Error::VarpiOutOfRange {
                        varpi: rational_to::<f64>(&varpi),
                        detail: format!(
                            "needs rho_(k+1) >= rho_(k0+1) + varpi*rho_1 = {need}, got {rho_next}"
                        ),
                    });
                }
                rho_disp_next / &rho1
            } else {
                rho_next / &rho1 - &varpi
            }
        }
    };
    let claimed_q_t = rational_to::<T>(&claimed_q);

    let launch_series = e.truncated_sum(k)?;
    let display_series = e.truncated_sum(display_depth)?;
    let phi0 = e.phi0.clone();
    let radius = p.radius;

    let mut launches = Vec::with_capacity(opts.launch_times.len());
    for &t_launch in &opts.launch_times {
        let y0 = launch_series.evaluate_real(&p.eps, t_launch)?;
        let fit_start = t_launch * opts.fit_start_factor;
        if fit_start >= opts.t_max {
            return Err(Error::InvalidProblem(format!(
                "fit window [{fit_start}, {}] is empty",
                opts.t_max
            )));
        }
        let sample_times = geometric_times(fit_start, opts.t_max, opts.samples);
        let guard_phi0: Vec<_> = phi0.components().iter().map(|c| c.compile()).collect();
        let int_opts = IntegrateOptions {
            rtol: opts.rtol,
            atol: opts.atol,
            guard: Some(Guard {
                center: Box::new(move |t: T| {
                    guard_phi0.iter().map(|c| c.eval_real(t)).collect()
                }),
                radius,
            }),
            max_steps: 100_000_000,
        };
        let traj = integrate(p, &y0, (t_launch, opts.t_max), &sample_times, &int_opts)?;
        let mut samples = Vec::with_capacity(traj.times.len());
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let s = display_series.evaluate_real(&p.eps, *t)?;
            let mut norm = T::zero();
            for (a, b) in y.iter().zip(&s) {
                norm = norm.max((*a - *b).abs());
            }
            samples.push((*t, norm));
        }
        let report = fit_decay(&samples, &p.eps.specs()[0], claimed_q_t, &opts.fit)?;
        launches.push(LaunchReport {
            launch_time: t_launch,
            samples,
            report,
            steps_accepted: traj.steps_accepted,
        });
    }

    Ok(ErrorCheck {
        claimed_q: claimed_q_t,
        launches,
    })
}

fn check_simple_spectrum<T: Real>(lambdas: &[Complex<T>]) -> Result<()> {
    for (i, a) in lambdas.iter().enumerate() {
        for b in lambdas.iter().skip(i + 1) {
            if (*a - *b).norm() <= T::of(1e-9) {
                return Err(Error::SpectrumPrecondition {
                    mode: "simple",
                    detail: format!("eigenvalues {a:?} and {b:?} coincide (0 in the difference set)"),
                });
            }
        }
    }
    Ok(())
}

/// First-order diagonal means `γ_{jl} = M((P₀⁻¹ ∂f_l/∂y(t,φ₀) P₀)_jj)` for
/// every `l` whose `ε_l` is not summable.
#[derive(Debug, Clone)]
pub struct GammaDiagnostics<T: Real> {
    /// Canonically sorted eigenvalues.
    pub eigenvalues: Vec<Complex<T>>,
    pub p0: CMat<T>,
    pub cond_p0: T,
    /// `(l, per-eigenvalue γ values)` for each non-summable `ε_l`.
    pub gammas: Vec<(usize, Vec<Complex<T>>)>,
}

pub fn gamma_first_order<T: Real>(
    p: &Problem<T>,
    e: &ExpansionResult<T>,
) -> Result<GammaDiagnostics<T>> {
    let eig = eigen_decompose(&p.a)?;
    let cond = eig.vectors.cond_one()?;
    if cond > T::of(COND_LIMIT) {
        return Err(Error::IllConditionedEigenvectors {
            cond: cond.to_f64().unwrap_or(f64::NAN),
        });
    }
    let p0_inv = eig.vectors.inverse()?;

    let mut gammas = Vec::new();
    for (idx, nl) in p.nonlinearities.iter().enumerate() {
        let l = idx + 1;
        if p.eps.spec(l)?.base.summable_at_infinity() {
            continue;
        }
        if nl.is_zero() {
            gammas.push((l, vec![Complex::new(T::zero(), T::zero()); p.dim]));
            continue;
        }
        let jac = nl.jacobian_at(&e.phi0)?;
        let conj = jac.conjugate(&p0_inv, &eig.vectors)?;
        let per_j: Vec<Complex<T>> = (0..p.dim).map(|j| conj.entry(j, j).mean_value()).collect();
        gammas.push((l, per_j));
    }

    Ok(GammaDiagnostics {
        eigenvalues: eig.values,
        p0: eig.vectors,
        cond_p0: cond,
        gammas,
    })
}

/// Verdict for one eigenvalue index in the parameter count.
#[derive(Debug, Clone)]
pub struct ParamVerdict<T> {
    pub j: usize,
    pub lambda: Complex<T>,
    /// Whether this index contributes an arbitrary constant.
    pub counts: bool,
    /// Final running integral (simple mode only).
    pub final_integral: Option<T>,
    /// Simple mode: whether the non-λ part of the integrand kept one sign
    /// over the sampled grid (the theorem's sign-coherence hypothesis).
    pub sign_coherent: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ParameterCount<T> {
    pub mode: ErrorMode,
    pub count: usize,
    pub verdicts: Vec<ParamVerdict<T>>,
}

/// Number of arbitrary scalar constants the error depends on.
///
/// NPI mode counts `Re λ_j < 0` and needs no γ data. Simple mode evaluates
/// `∫ [Re λ_j + Σ Re γ_{jl}·ε_l(t) + (ϖ - ρ_{k+1}/ϱ₁)·ε₁'(t)/ε₁(t)] dt`
/// on a geometric grid and counts the indices whose integral does not
/// diverge to `+∞` (threshold rule).
pub fn parameter_count<T: Real>(
    p: &Problem<T>,
    diag: Option<&GammaDiagnostics<T>>,
    mode: ErrorMode,
    k: usize,
    varpi: Option<&BigRational>,
) -> Result<ParameterCount<T>> {
    match mode {
        ErrorMode::Npi => {
            let eigenvalues = match diag {
                Some(d) => d.eigenvalues.clone(),
                None => crate::osc::spectrum(&p.a)?,
            };
            let mut verdicts = Vec::new();
            for (j, &lambda) in eigenvalues.iter().enumerate() {
                if lambda.re.abs() <= T::of(1e-9) {
                    return Err(Error::SpectrumPrecondition {
                        mode: "NPI",
                        detail: format!("eigenvalue {lambda:?} is purely imaginary"),
                    });
                }
                verdicts.push(ParamVerdict {
                    j: j + 1,
                    lambda,
                    counts: lambda.re < T::zero(),
                    final_integral: None,
                    sign_coherent: None,
                });
            }
            let count = verdicts.iter().filter(|v| v.counts).count();
            Ok(ParameterCount {
                mode,
                count,
                verdicts,
            })
        }
        ErrorMode::Simple => {
            let diag = diag.ok_or_else(|| {
                Error::InvalidProblem("simple mode requires gamma diagnostics".into())
            })?;
            let varpi = varpi.ok_or_else(|| {
                Error::InvalidProblem("simple mode requires varpi".into())
            })?;
            if varpi > &BigRational::from_integer(2.into()) {
                return Err(Error::VarpiOutOfRange {
                    varpi: rational_to::<f64>(varpi),
                    detail: "only first-order gamma corrections are available, need varpi <= 2"
                        .into(),
                });
            }
            let ranks = leading_ranks(&p.eps, k + 1);
            let shift = rational_to::<T>(&(varpi - &ranks[k] / p.eps.min_rank()));

            // Non-summable ε_l values enter through their γ row.
            let eps1 = &p.eps.specs()[0];
            let eps1_deriv = p.eps.derivative(1, 1)?;

            let t0 = p.t0;
            let t_final = t0 * T::of(1e6);
            let grid = geometric_times(t0, t_final, 16);

            let mut verdicts = Vec::new();
            for (j, &lambda) in diag.eigenvalues.iter().enumerate() {
                let integrand = |t: T| -> Result<T> {
                    let mut acc = lambda.re;
                    for (l, per_j) in &diag.gammas {
                        let eps_val = p.eps.derivative(*l, 0)?.evaluate(t)?;
                        acc = acc + per_j[j].re * eps_val;
                    }
                    let e1 = eps1.base.evaluate(t)?;
                    let e1p = eps1_deriv.evaluate(t)?;
                    Ok(acc + shift * e1p / e1)
                };
                let mut running = Vec::with_capacity(grid.len());
                let mut acc = T::zero();
                for w in grid.windows(2) {
                    acc = acc + simpson_log(&integrand, w[0], w[1], 64)?;
                    running.push(acc);
                }
                let m = running.len();
                let diverges = running[m - 1] > T::of(DIVERGENCE_THRESHOLD)
                    && running[m - 1] > running[m - 2]
                    && running[m - 2] > running[m - 3];

                // Sign coherence of the non-λ part, sampled on the grid.
                let mut signs = (false, false);
                for &t in &grid {
                    let v = integrand(t)? - lambda.re;
                    if v > T::zero() {
                        signs.0 = true;
                    }
                    if v < T::zero() {
                        signs.1 = true;
                    }
                }

                verdicts.push(ParamVerdict {
                    j: j + 1,
                    lambda,
                    counts: !diverges,
                    final_integral: Some(running[m - 1]),
                    sign_coherent: Some(!(signs.0 && signs.1)),
                });
            }
            let count = verdicts.iter().filter(|v| v.counts).count();
            Ok(ParameterCount {
                mode,
                count,
                verdicts,
            })
        }
    }
}

/// Composite Simpson in log coordinates: `∫ h(t) dt = ∫ h(e^u)·e^u du`.
fn simpson_log<T: Real>(
    h: &dyn Fn(T) -> Result<T>,
    a: T,
    b: T,
    intervals: usize,
) -> Result<T> {
    let ua = a.ln();
    let ub = b.ln();
    let n = intervals * 2;
    let du = (ub - ua) / T::of(n as f64);
    let g = |u: T| -> Result<T> {
        let t = u.exp();
        Ok(h(t)? * t)
    };
    let mut acc = g(ua)? + g(ub)?;
    for i in 1..n {
        let u = ua + du * T::of(i as f64);
        let w = if i % 2 == 1 { T::of(4.0) } else { T::of(2.0) };
        acc = acc + w * g(u)?;
    }
    Ok(acc * du / T::of(3.0))
}

/// Consistency guard for the symbolic derivative path: compare the symbolic
/// `s'(t)` against a 5-point finite-difference stencil of `s`.
pub fn derivative_consistency<T: Real>(
    p: &Problem<T>,
    e: &ExpansionResult<T>,
    k: usize,
    t: T,
) -> Result<T> {
    let s = e.truncated_sum(k)?;
    let h = T::of(5e-3);
    let sym = s.evaluate_derivative_real(&p.eps, t)?;
    let m2 = s.evaluate_real(&p.eps, t - h - h)?;
    let m1 = s.evaluate_real(&p.eps, t - h)?;
    let p1 = s.evaluate_real(&p.eps, t + h)?;
    let p2 = s.evaluate_real(&p.eps, t + h + h)?;
    let mut worst = T::zero();
    for i in 0..sym.len() {
        let fd = (m2[i] - T::of(8.0) * m1[i] + T::of(8.0) * p1[i] - p2[i]) / (T::of(12.0) * h);
        let rel = (fd - sym[i]).abs() / sym[i].abs().max(T::of(1e-9));
        worst = worst.max(rel);
    }
    Ok(worst)
}
