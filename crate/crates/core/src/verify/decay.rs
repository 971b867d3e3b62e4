//! Log-log decay-rate fits: the numerical reading of every `O(ε₁^q)` claim.
//!
//! A claim passes when (a) the least-squares slope of `ln‖v‖` against
//! `ln ε₁(t)` reaches the claimed exponent within a slack, and (b) the
//! per-window sup of the normalized quantity `‖v‖/ε₁^q` shows no growing
//! trend between consecutive geometric windows.

use crate::consts::{MIN_WINDOWS, RATIO_TOL, SLOPE_TOL};
use crate::error::{Error, Result};
use crate::ranks::EpsSpec;
use crate::Real;

#[derive(Debug, Clone)]
pub struct FitOptions<T> {
    pub n_windows: usize,
    pub slope_tol: T,
    pub ratio_tol: T,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            n_windows: 12,
            slope_tol: T::of(SLOPE_TOL),
            ratio_tol: T::of(RATIO_TOL),
        }
    }
}

/// One geometric window with the sup of the normalized values inside it.
#[derive(Debug, Clone)]
pub struct WindowSup<T> {
    pub t_lo: T,
    pub t_hi: T,
    pub sup: T,
}

/// Verdict for one `O(ε₁^q)` claim.
#[derive(Debug, Clone)]
pub struct DecayReport<T> {
    pub claimed_q: T,
    /// Least-squares slope; `+∞` for identically zero samples.
    pub fitted_slope: T,
    pub window_sups: Vec<WindowSup<T>>,
    pub sup_overall: T,
    pub slope_pass: bool,
    pub ratio_pass: bool,
    pub pass: bool,
    pub slope_tol: T,
    pub ratio_tol: T,
}

/// Fit `‖value‖ ~ ε₁(t)^q` on `(t, ‖value‖)` samples (t ascending).
pub fn fit_decay<T: Real>(
    samples: &[(T, T)],
    eps1: &EpsSpec,
    q: T,
    opts: &FitOptions<T>,
) -> Result<DecayReport<T>> {
    if opts.n_windows < MIN_WINDOWS {
        return Err(Error::InvalidProblem(format!(
            "need at least {MIN_WINDOWS} windows, got {}",
            opts.n_windows
        )));
    }
    if samples.len() < 2 * opts.n_windows {
        return Err(Error::InvalidProblem(format!(
            "need at least {} samples for {} windows, got {}",
            2 * opts.n_windows,
            opts.n_windows,
            samples.len()
        )));
    }

    let mut eps_vals = Vec::with_capacity(samples.len());
    for &(t, _) in samples {
        let e = eps1.base.evaluate(t)?;
        if !(e > T::zero()) {
            return Err(Error::InvalidProblem(format!(
                "eps1 must be positive on the samples, got {e} at t = {t}"
            )));
        }
        eps_vals.push(e);
    }

    // Identically zero values: the claim holds exactly.
    if samples.iter().all(|&(_, v)| v == T::zero()) {
        return Ok(DecayReport {
            claimed_q: q,
            fitted_slope: T::infinity(),
            window_sups: vec![],
            sup_overall: T::zero(),
            slope_pass: true,
            ratio_pass: true,
            pass: true,
            slope_tol: opts.slope_tol,
            ratio_tol: opts.ratio_tol,
        });
    }

    // Least squares of ln v on ln eps1, skipping exact zeros.
    let mut n = T::zero();
    let (mut sx, mut sy, mut sxx, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (&(_, v), &e) in samples.iter().zip(&eps_vals) {
        if v <= T::zero() {
            continue;
        }
        let x = e.ln();
        let y = v.ln();
        n = n + T::one();
        sx = sx + x;
        sy = sy + y;
        sxx = sxx + x * x;
        sxy = sxy + x * y;
    }
    let denom = n * sxx - sx * sx;
    let fitted_slope = if denom.abs() <= T::epsilon() {
        T::zero()
    } else {
        (n * sxy - sx * sy) / denom
    };

    // Contiguous index chunks of geometric samples give geometric windows.
    let chunk = samples.len() / opts.n_windows;
    let mut window_sups = Vec::with_capacity(opts.n_windows);
    for w in 0..opts.n_windows {
        let lo = w * chunk;
        let hi = if w + 1 == opts.n_windows {
            samples.len()
        } else {
            (w + 1) * chunk
        };
        let mut sup = T::zero();
        for ((t, v), e) in samples[lo..hi].iter().zip(&eps_vals[lo..hi]) {
            let _ = t;
            let norm = *v / e.powf(q);
            sup = sup.max(norm);
        }
        window_sups.push(WindowSup {
            t_lo: samples[lo].0,
            t_hi: samples[hi - 1].0,
            sup,
        });
    }
    let sup_overall = window_sups
        .iter()
        .map(|w| w.sup)
        .fold(T::zero(), |a, b| a.max(b));

    let slope_pass = fitted_slope >= q - opts.slope_tol;
    let floor = sup_overall * T::of(1e-12);
    let ratio_pass = window_sups.windows(2).all(|pair| {
        pair[0].sup <= floor || pair[1].sup <= opts.ratio_tol * pair[0].sup
    });

    Ok(DecayReport {
        claimed_q: q,
        fitted_slope,
        window_sups,
        sup_overall,
        slope_pass,
        ratio_pass,
        pass: slope_pass && ratio_pass,
        slope_tol: opts.slope_tol,
        ratio_tol: opts.ratio_tol,
    })
}

/// `n` geometrically spaced points over `[lo, hi]`, endpoints exact.
pub fn geometric_times<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2 && hi > lo && lo > T::zero());
    let ratio = (hi / lo).ln() / T::of((n - 1) as f64);
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                lo * (ratio * T::of(i as f64)).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerlog::{rational_int, PowerLogMonomial};

    fn eps_one_over_t() -> EpsSpec {
        EpsSpec::new(
            1,
            PowerLogMonomial::eps_style(rational_int(1), vec![]).unwrap(),
        )
        .unwrap()
    }

    fn samples_from(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        geometric_times(100.0, 1e5, 160)
            .into_iter()
            .map(|t| (t, f(t)))
            .collect()
    }

    #[test]
    fn exact_power_fits_its_exponent() {
        let eps = eps_one_over_t();
        let rep = fit_decay(
            &samples_from(|t| t.powi(-2)),
            &eps,
            2.0,
            &FitOptions::default(),
        )
        .unwrap();
        assert!((rep.fitted_slope - 2.0).abs() < 1e-3);
        assert!(rep.pass);
    }

    #[test]
    fn mixture_converges_to_leading_exponent() {
        let eps = eps_one_over_t();
        let rep = fit_decay(
            &samples_from(|t| t.powi(-2) + 0.01 * t.powi(-3)),
            &eps,
            2.0,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(rep.pass);
        assert!(rep.fitted_slope >= 2.0 - 1e-3);
    }

    #[test]
    fn designed_failure_is_detected() {
        // ε₁^{1.5} against a claim of 2 must fail.
        let eps = eps_one_over_t();
        let rep = fit_decay(
            &samples_from(|t| t.powf(-1.5)),
            &eps,
            2.0,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(!rep.pass);
        assert!(!rep.slope_pass);
        assert!(!rep.ratio_pass);
    }

    #[test]
    fn all_zero_is_an_exact_pass() {
        let eps = eps_one_over_t();
        let rep = fit_decay(&samples_from(|_| 0.0), &eps, 3.0, &FitOptions::default()).unwrap();
        assert!(rep.pass);
        assert!(rep.fitted_slope.is_infinite());
    }

    #[test]
    fn window_count_is_enforced() {
        let eps = eps_one_over_t();
        let opts = FitOptions {
            n_windows: 4,
            ..Default::default()
        };
        assert!(fit_decay(&samples_from(|t| 1.0 / t), &eps, 1.0, &opts).is_err());
    }
}
