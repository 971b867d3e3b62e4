//! Finite exponential sums `Σ c·e^{μt}` with lattice exponents.
//!
//! The term map is keyed by integer lattice points, so ring operations,
//! differentiation, the mean value, and resonance checks are exact on the
//! lattice; floating point only enters through the coefficients.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use super::basis::{Basis, FreqVector};
use crate::consts::TAU_ZERO;
use crate::error::{Error, Result};
use crate::Real;

/// A real or complex oscillating function: finite sum of `c·e^{μt}` terms
/// with `Re μ ≤ 0`, exponents on the basis lattice.
///
/// When the `real` flag is set the term set is conjugate-closed and the
/// function evaluates to a real number (up to coefficient pruning noise).
#[derive(Debug, Clone, PartialEq)]
pub struct OscFn<T: Real> {
    basis: Basis<T>,
    terms: BTreeMap<FreqVector, Complex<T>>,
    real: bool,
}

impl<T: Real> OscFn<T> {
    pub fn zero(basis: &Basis<T>) -> Self {
        Self {
            basis: Arc::clone(basis),
            terms: BTreeMap::new(),
            real: true,
        }
    }

    pub fn constant(basis: &Basis<T>, value: T) -> Self {
        Self::constant_complex(basis, Complex::new(value, T::zero()))
    }

    pub fn constant_complex(basis: &Basis<T>, value: Complex<T>) -> Self {
        let mut terms = BTreeMap::new();
        if value.norm() >= T::of(TAU_ZERO) {
            terms.insert(FreqVector::zero(basis.len()), value);
        }
        Self {
            basis: Arc::clone(basis),
            terms,
            real: value.im.is_zero(),
        }
    }

    /// Build from raw terms. Coefficients on equal lattice points merge,
    /// sub-tolerance coefficients are pruned, and the reality flag is set by
    /// checking conjugate closure.
    pub fn from_terms(
        basis: &Basis<T>,
        terms: impl IntoIterator<Item = (FreqVector, Complex<T>)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<FreqVector, Complex<T>> = BTreeMap::new();
        for (k, c) in terms {
            k.validate(basis)?;
            let entry = map.entry(k).or_insert_with(Complex::zero);
            *entry = *entry + c;
        }
        let mut f = Self {
            basis: Arc::clone(basis),
            terms: map,
            real: false,
        };
        f.prune();
        f.real = f.check_conjugate_closed();
        Ok(f)
    }

    /// `coeff·e^{μt}` for the lattice point `k`.
    pub fn exp_term(basis: &Basis<T>, k: FreqVector, coeff: Complex<T>) -> Result<Self> {
        Self::from_terms(basis, [(k, coeff)])
    }

    /// `sin(σt)` where `σ` is the exponent of the lattice point `k`
    /// (all-oscillation `k` expected).
    pub fn sin(basis: &Basis<T>, k: FreqVector) -> Result<Self> {
        let half = T::of(0.5);
        let kc = k.conj_in(basis);
        Self::from_terms(
            basis,
            [
                (k, Complex::new(T::zero(), -half)),
                (kc, Complex::new(T::zero(), half)),
            ],
        )
    }

    /// `cos(σt)` where `σ` is the exponent of the lattice point `k`.
    pub fn cos(basis: &Basis<T>, k: FreqVector) -> Result<Self> {
        let half = T::of(0.5);
        let kc = k.conj_in(basis);
        Self::from_terms(
            basis,
            [
                (k, Complex::new(half, T::zero())),
                (kc, Complex::new(half, T::zero())),
            ],
        )
    }

    pub fn basis(&self) -> &Basis<T> {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FreqVector, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, k: &FreqVector) -> Complex<T> {
        self.terms.get(k).copied().unwrap_or_else(Complex::zero)
    }

    /// Exponents `μ` of all stored terms.
    pub fn exponents(&self) -> impl Iterator<Item = Complex<T>> + '_ {
        self.terms.keys().map(move |k| k.exponent(&self.basis))
    }

    /// Largest coefficient modulus (0 for the zero function).
    pub fn max_coeff_norm(&self) -> T {
        self.terms
            .values()
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    fn prune(&mut self) {
        let tol = T::of(TAU_ZERO);
        self.terms.retain(|_, c| c.norm() >= tol);
    }

    fn check_conjugate_closed(&self) -> bool {
        let tol = T::of(TAU_ZERO);
        self.terms.iter().all(|(k, c)| {
            let kc = k.conj_in(&self.basis);
            (self.coefficient(&kc) - c.conj()).norm() <= tol
        })
    }

    fn require_same_basis(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis == other.basis {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_basis(other)?;
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            let entry = terms.entry(k.clone()).or_insert_with(Complex::zero);
            *entry = *entry + *c;
        }
        let mut f = Self {
            basis: Arc::clone(&self.basis),
            terms,
            real: self.real && other.real,
        };
        f.prune();
        Ok(f)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.negate())
    }

    /// Term-wise lattice convolution: `e^{μ₁t}·e^{μ₂t} = e^{(μ₁+μ₂)t}`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.require_same_basis(other)?;
        let mut terms: BTreeMap<FreqVector, Complex<T>> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let k = ka.add(kb);
                let entry = terms.entry(k).or_insert_with(Complex::zero);
                *entry = *entry + *ca * *cb;
            }
        }
        let mut f = Self {
            basis: Arc::clone(&self.basis),
            terms,
            real: self.real && other.real,
        };
        f.prune();
        Ok(f)
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        let mut f = Self {
            basis: Arc::clone(&self.basis),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), *c * factor))
                .collect(),
            real: self.real && factor.im.is_zero(),
        };
        f.prune();
        f
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(Complex::new(factor, T::zero()))
    }

    pub fn negate(&self) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -*c)).collect(),
            real: self.real,
        }
    }

    /// `c·e^{μt} ↦ cμ·e^{μt}`; reality is preserved because conjugate pairs
    /// pick up conjugate factors.
    pub fn differentiate(&self) -> Self {
        let mut f = Self {
            basis: Arc::clone(&self.basis),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| {
                    let mu = k.exponent(&self.basis);
                    (k.clone(), *c * mu)
                })
                .collect(),
            real: self.real,
        };
        f.prune();
        f
    }

    /// Mean value `lim (1/t)∫f`: the coefficient at the zero lattice point.
    /// Every other term has `Re μ ≤ 0`, `μ ≠ 0` and averages to zero.
    pub fn mean_value(&self) -> Complex<T> {
        self.coefficient(&FreqVector::zero(self.basis.len()))
    }

    pub fn conj(&self) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.conj_in(&self.basis), c.conj()))
                .collect(),
            real: self.real,
        }
    }

    /// `(f + conj f)/2`: conjugate-closed by construction, flagged real.
    pub fn real_part(&self) -> Self {
        let mut f = self
            .add(&self.conj())
            .expect("conjugate shares the basis")
            .scale_real(T::of(0.5));
        f.real = true;
        f
    }

    /// Direct summation `Σ c·e^{μt}`.
    pub fn evaluate(&self, t: T) -> Complex<T> {
        let mut acc = Complex::zero();
        for (k, c) in &self.terms {
            let mu = k.exponent(&self.basis);
            acc = acc + *c * (mu.scale(t)).exp();
        }
        acc
    }

    /// Evaluation of a real-flagged function; the imaginary part is noise and
    /// is dropped.
    pub fn evaluate_real(&self, t: T) -> T {
        debug_assert!(self.real, "evaluate_real on a non-real function");
        self.evaluate(t).re
    }

    /// Float-only `(μ, c)` list for hot evaluation loops.
    pub fn compile(&self) -> CompiledOscFn<T> {
        CompiledOscFn {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.exponent(&self.basis), *c))
                .collect(),
        }
    }
}

/// Precomputed exponent/coefficient pairs of an [`OscFn`].
#[derive(Debug, Clone)]
pub struct CompiledOscFn<T> {
    terms: Vec<(Complex<T>, Complex<T>)>,
}

impl<T: Real> CompiledOscFn<T> {
    pub fn eval_real(&self, t: T) -> T {
        let mut acc = T::zero();
        for (mu, c) in &self.terms {
            let e = (mu.scale(t)).exp();
            acc = acc + c.re * e.re - c.im * e.im;
        }
        acc
    }
}
