//! Resonance-free linear solves inside the exponential-sum algebra.
//!
//! `y' = λy + f` maps each term `c·e^{μt}` to `(c/(μ-λ))·e^{μt}`, which is
//! admissible exactly when every exponent keeps a positive distance from λ.
//! Systems go through a complex Schur triangularization and are solved bottom
//! up in the triangular coordinates; the real part of the mapped-back
//! solution is the in-class particular solution. The free exponential tail of
//! the general solution is never added: it leaves the class.

use num_complex::Complex;

use super::basis::Basis;
use super::func::OscFn;
use super::matrix::OscVector;
use crate::consts::TAU_RESIDUAL;
use crate::error::{Error, Result};
use crate::linalg::schur_real;
use crate::Real;

/// Outcome of a spectral separation scan: the worst (closest) pair found.
#[derive(Debug, Clone)]
pub struct SeparationReport<T> {
    pub pass: bool,
    pub min_distance: T,
    pub worst_exponent: Option<Complex<T>>,
    pub worst_lambda: Option<Complex<T>>,
    pub delta_min: T,
}

/// Check `|μ - λ| ≥ δ_min` for every supplied exponent and every λ. Failure
/// is a report, not an error.
pub fn separation_check<T: Real>(
    exponents: impl IntoIterator<Item = Complex<T>>,
    lambdas: &[Complex<T>],
    delta_min: T,
) -> SeparationReport<T> {
    let mut min_distance = T::infinity();
    let mut worst_exponent = None;
    let mut worst_lambda = None;
    for mu in exponents {
        for &lambda in lambdas {
            let d = (mu - lambda).norm();
            if d < min_distance {
                min_distance = d;
                worst_exponent = Some(mu);
                worst_lambda = Some(lambda);
            }
        }
    }
    SeparationReport {
        pass: min_distance >= delta_min,
        min_distance,
        worst_exponent,
        worst_lambda,
        delta_min,
    }
}

/// Separation scan over all terms appearing in a collection of functions.
pub fn separation_check_fns<T: Real>(
    fns: &[&OscFn<T>],
    lambdas: &[Complex<T>],
    delta_min: T,
) -> SeparationReport<T> {
    let exps: Vec<Complex<T>> = fns.iter().flat_map(|f| f.exponents()).collect();
    separation_check(exps, lambdas, delta_min)
}

/// Exhaustive scan of a truncated lattice `|k_j| ≤ bound` against a set of
/// eigenvalues (or eigenvalue differences).
pub fn separation_check_lattice<T: Real>(
    basis: &Basis<T>,
    bound: i64,
    lambdas: &[Complex<T>],
    delta_min: T,
) -> SeparationReport<T> {
    let n = basis.len();
    let mut exps = Vec::new();
    let mut counters = vec![0i64; n];
    let ranges: Vec<(i64, i64)> = basis
        .generators()
        .iter()
        .map(|g| if g.signed_lattice() { (-bound, bound) } else { (0, bound) })
        .collect();
    for (c, r) in counters.iter_mut().zip(&ranges) {
        *c = r.0;
    }
    loop {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (&k, g) in counters.iter().zip(basis.generators()) {
            if k != 0 {
                acc = acc + g.exponent().scale(T::of(k as f64));
            }
        }
        exps.push(acc);
        // Odometer increment over the truncated box.
        let mut pos = 0;
        loop {
            if pos == n {
                return separation_check(exps, lambdas, delta_min);
            }
            counters[pos] += 1;
            if counters[pos] <= ranges[pos].1 {
                break;
            }
            counters[pos] = ranges[pos].0;
            pos += 1;
        }
    }
}

/// Particular solution of `y' = λy + f` in the class: term-wise
/// `c ↦ c/(μ - λ)`. Rejects resonant inputs.
pub fn solve_scalar_linear<T: Real>(
    lambda: Complex<T>,
    f: &OscFn<T>,
    delta_min: T,
) -> Result<OscFn<T>> {
    let mut mapped = Vec::with_capacity(f.num_terms());
    for (k, c) in f.terms() {
        let mu = k.exponent(f.basis());
        let denom = mu - lambda;
        let dist = denom.norm();
        if dist < delta_min {
            return Err(Error::Resonance {
                exp_re: mu.re.to_f64().unwrap_or(f64::NAN),
                exp_im: mu.im.to_f64().unwrap_or(f64::NAN),
                lambda_re: lambda.re.to_f64().unwrap_or(f64::NAN),
                lambda_im: lambda.im.to_f64().unwrap_or(f64::NAN),
                distance: dist.to_f64().unwrap_or(f64::NAN),
                delta_min: delta_min.to_f64().unwrap_or(f64::NAN),
            });
        }
        mapped.push((k.clone(), *c / denom));
    }
    OscFn::from_terms(f.basis(), mapped)
}

/// A certified system solve: the particular solution plus the symbolic
/// substitution residual and the worst spectral separation seen.
#[derive(Debug, Clone)]
pub struct SystemSolve<T: Real> {
    pub solution: OscVector<T>,
    /// Max coefficient modulus of `φ' - Aφ - f` after reconstruction.
    pub residual_norm: T,
    pub min_separation: T,
}

/// Particular solution of `φ' = Aφ + f` in the class.
///
/// The real matrix is triangularized (`A = Q T Q^H`, complex Schur); the
/// transformed system is solved bottom-up by scalar solves, mapped back, and
/// the real part is taken. The substitution residual is reconstructed
/// symbolically and must stay below the certificate tolerance.
pub fn solve_system_linear<T: Real>(
    a: &[Vec<T>],
    f: &OscVector<T>,
    delta_min: T,
) -> Result<SystemSolve<T>> {
    let n = f.dim();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    let dec = schur_real(a)?;
    let q_h = dec.q.adjoint();

    // f in triangular coordinates.
    let f_tri = f.apply_complex_matrix(&q_h)?;

    // Bottom-up scalar solves; row i couples only to rows below.
    let basis = f.basis();
    let mut z: Vec<OscFn<T>> = vec![OscFn::zero(basis); n];
    let mut min_separation = T::infinity();
    for i in (0..n).rev() {
        let mut rhs = f_tri.component(i).clone();
        for (l, zl) in z.iter().enumerate().skip(i + 1) {
            let w = dec.t[(i, l)];
            if !w.norm().is_zero() {
                rhs = rhs.add(&zl.scale(w))?;
            }
        }
        let lambda = dec.t[(i, i)];
        let sep = separation_check(rhs.exponents(), &[lambda], delta_min);
        if sep.min_distance < min_separation {
            min_separation = sep.min_distance;
        }
        z[i] = solve_scalar_linear(lambda, &rhs, delta_min)?;
    }

    let z_vec = OscVector::new(z)?;
    let phi = z_vec.apply_complex_matrix(&dec.q)?.real_part();

    // Substitution certificate. The absolute bound is stated for f64; in
    // narrower scalars the epsilon-scaled bound takes over.
    let residual = phi
        .differentiate()
        .sub(&phi.apply_real_matrix(a)?)?
        .sub(f)?;
    let residual_norm = residual.max_coeff_norm();
    let certificate = T::of(TAU_RESIDUAL)
        .max(T::epsilon() * T::of(1e4) * (T::one() + f.max_coeff_norm()));
    debug_assert!(
        residual_norm <= certificate,
        "solve certificate violated: residual {residual_norm:?}"
    );

    Ok(SystemSolve {
        solution: phi,
        residual_norm,
        min_separation,
    })
}

/// The spectrum of a real matrix as complex numbers, canonically sorted.
pub fn spectrum<T: Real>(a: &[Vec<T>]) -> Result<Vec<Complex<T>>> {
    crate::linalg::eigenvalues_real(a)
}

/// Pairwise eigenvalue differences `λ_j - λ_l` (j ≠ l).
pub fn spectrum_differences<T: Real>(a: &[Vec<T>]) -> Result<Vec<Complex<T>>> {
    let vals = spectrum(a)?;
    let mut out = Vec::new();
    for (j, &vj) in vals.iter().enumerate() {
        for (l, &vl) in vals.iter().enumerate() {
            if j != l {
                out.push(vj - vl);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::basis::{FreqVector, Generator, GeneratorBasis};
    use super::*;

    fn k(coeffs: &[i64]) -> FreqVector {
        FreqVector::new(coeffs.to_vec())
    }

    #[test]
    fn separation_examples() {
        let b = GeneratorBasis::new(vec![Generator::Oscillation(1.0f64)]).unwrap();
        let e = OscFn::exp_term(&b, k(&[1]), Complex::new(1.0, 0.0)).unwrap();

        let rep = separation_check_fns(&[&e], &[Complex::new(-1.0, 0.0)], 1e-6);
        assert!(rep.pass);
        assert!((rep.min_distance - 2.0f64.sqrt()).abs() < 1e-15);

        let rep = separation_check_fns(&[&e], &[Complex::new(0.0, 1.0)], 1e-6);
        assert!(!rep.pass);
        assert_eq!(rep.min_distance, 0.0);
    }

    #[test]
    fn lattice_scan_for_diag_fixture() {
        // Γ₂ with |k| ≤ 3 over {1, √2, e, π} vs Λ(A) ∪ Δ(A), A = diag(-1,-2):
        // distances are at least 1 (the spectrum is real and |λ| ≥ 1).
        let b = GeneratorBasis::new(vec![
            Generator::Oscillation(1.0f64),
            Generator::Oscillation(2.0f64.sqrt()),
            Generator::Oscillation(std::f64::consts::E),
            Generator::Oscillation(std::f64::consts::PI),
        ])
        .unwrap();
        let a = vec![vec![-1.0, 0.0], vec![0.0, -2.0]];
        let mut lambdas = spectrum(&a).unwrap();
        lambdas.extend(spectrum_differences(&a).unwrap());
        let rep = separation_check_lattice(&b, 3, &lambdas, 1e-6);
        assert!(rep.pass, "worst distance {}", rep.min_distance);
        assert!(rep.min_distance >= 1.0 - 1e-12);
    }

    #[test]
    fn scalar_solve_formula() {
        // λ = -1, f = e^{it}: solution (1/(i+1)) e^{it}.
        let b = GeneratorBasis::new(vec![Generator::Oscillation(1.0f64)]).unwrap();
        let f = OscFn::exp_term(&b, k(&[1]), Complex::new(1.0, 0.0)).unwrap();
        let y = solve_scalar_linear(Complex::new(-1.0, 0.0), &f, 1e-6).unwrap();
        let want = Complex::new(1.0, 0.0) / Complex::new(1.0, 1.0);
        assert!((y.coefficient(&k(&[1])) - want).norm() < 1e-15);

        // Residual y' - λy - f is identically zero.
        let res = y
            .differentiate()
            .sub(&y.scale(Complex::new(-1.0, 0.0)))
            .unwrap()
            .sub(&f)
            .unwrap();
        assert!(res.is_zero());

        // λ = -1, f = 0 -> 0.
        let z = solve_scalar_linear(Complex::new(-1.0, 0.0), &OscFn::zero(&b), 1e-6).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn scalar_solve_sine() {
        // y' = -y + sin t has the in-class solution (sin t - cos t)/2.
        let b = GeneratorBasis::new(vec![Generator::Oscillation(1.0f64)]).unwrap();
        let f = OscFn::sin(&b, k(&[1])).unwrap();
        let y = solve_scalar_linear(Complex::new(-1.0, 0.0), &f, 1e-6).unwrap();
        let want = OscFn::sin(&b, k(&[1]))
            .unwrap()
            .sub(&OscFn::cos(&b, k(&[1])).unwrap())
            .unwrap()
            .scale_real(0.5);
        for &t in &[0.0, 0.5, 2.0, 9.0] {
            assert!((y.evaluate_real(t) - want.evaluate_real(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn scalar_solve_rejects_resonance() {
        let b = GeneratorBasis::new(vec![Generator::Oscillation(1.0f64)]).unwrap();
        let f = OscFn::exp_term(&b, k(&[1]), Complex::new(1.0, 0.0)).unwrap();
        match solve_scalar_linear(Complex::new(0.0, 1.0), &f, 1e-6) {
            Err(Error::Resonance { .. }) => {}
            other => panic!("expected resonance, got {other:?}"),
        }
    }

    #[test]
    fn system_solve_diag_fixture() {
        // A = diag(-1,-2), f = (sin t, cos e t): componentwise scalar solves,
        // residual checked at 20 sample points.
        let b = GeneratorBasis::new(vec![
            Generator::Oscillation(1.0f64),
            Generator::Oscillation(std::f64::consts::E),
        ])
        .unwrap();
        let a = vec![vec![-1.0, 0.0], vec![0.0, -2.0]];
        let f = OscVector::new(vec![
            OscFn::sin(&b, k(&[1, 0])).unwrap(),
            OscFn::cos(&b, k(&[0, 1])).unwrap(),
        ])
        .unwrap();
        let s = solve_system_linear(&a, &f, 1e-6).unwrap();
        assert!(s.residual_norm < 1e-10);
        assert!(s.solution.is_real());

        // Pointwise residual φ' - Aφ - f.
        let dphi = s.solution.differentiate();
        let aphi = s.solution.apply_real_matrix(&a).unwrap();
        for i in 0..20 {
            let t = 0.5 * i as f64;
            for c in 0..2 {
                let r = dphi.component(c).evaluate_real(t)
                    - aphi.component(c).evaluate_real(t)
                    - f.component(c).evaluate_real(t);
                assert!(r.abs() < 1e-10, "pointwise residual {r} at t={t}");
            }
        }

        // Component 1 solves y' = -y + sin t.
        let want = solve_scalar_linear(Complex::new(-1.0, 0.0), f.component(0), 1e-6).unwrap();
        for &t in &[0.0, 1.0, 4.0] {
            assert!(
                (s.solution.component(0).evaluate_real(t) - want.evaluate_real(t)).abs() < 1e-12
            );
        }
    }

    #[test]
    fn system_solve_constant_forcing_is_minus_a_inverse() {
        // f = m0 constant: the full solution is -A^{-1} m0.
        let b = GeneratorBasis::<f64>::empty();
        let a = vec![vec![-1.0, 0.5], vec![0.25, -2.0]];
        let m0 = [1.0, -0.5];
        let f = OscVector::new(vec![
            OscFn::constant(&b, m0[0]),
            OscFn::constant(&b, m0[1]),
        ])
        .unwrap();
        let s = solve_system_linear(&a, &f, 1e-6).unwrap();
        let want = crate::linalg::solve_real(&a, &[-m0[0], -m0[1]]).unwrap();
        let got = s.solution.evaluate_real(3.0);
        for i in 0..2 {
            assert!((got[i] - want[i]).abs() < 1e-12);
        }

        // f = 0 -> 0.
        let z = solve_system_linear(&a, &OscVector::zero(&b, 2), 1e-6).unwrap();
        assert!(z.solution.is_zero());
    }

    #[test]
    fn system_solve_nondiagonal_matrix() {
        let b = GeneratorBasis::new(vec![Generator::Oscillation(1.0f64)]).unwrap();
        let a = vec![vec![-1.0, 2.0], vec![0.5, -3.0]];
        let f = OscVector::new(vec![
            OscFn::sin(&b, k(&[1])).unwrap(),
            OscFn::cos(&b, k(&[1])).unwrap(),
        ])
        .unwrap();
        let s = solve_system_linear(&a, &f, 1e-6).unwrap();
        assert!(s.residual_norm < 1e-10);
    }
}
