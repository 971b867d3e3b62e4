//! Frequency lattices for exponential sums.
//!
//! Exponents are never compared as floating-point numbers: every exponent is
//! an integer combination of declared generators, and equality is decided on
//! the integer tuples. A generator is either a pure oscillation (exponent
//! `i·freq`, signed integer lattice) or a pure decay (exponent `rate < 0`,
//! nonnegative integer lattice). Oscillation frequencies are assumed
//! rationally independent; the zero-tuple reading of the mean value relies on
//! that.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::Real;

/// One lattice generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator<T> {
    /// Exponent `i·freq` with `freq != 0`; lattice coefficients in `Z`.
    Oscillation(T),
    /// Exponent `rate < 0`; lattice coefficients in `N_0`.
    Decay(T),
}

impl<T: Real> Generator<T> {
    pub fn exponent(&self) -> Complex<T> {
        match *self {
            Generator::Oscillation(freq) => Complex::new(T::zero(), freq),
            Generator::Decay(rate) => Complex::new(rate, T::zero()),
        }
    }

    /// Signed lattices admit negative integer coefficients.
    pub fn signed_lattice(&self) -> bool {
        matches!(self, Generator::Oscillation(_))
    }
}

/// Ordered list of generators defining the admissible exponent lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBasis<T> {
    generators: Vec<Generator<T>>,
}

/// Bases are shared by reference: every term map in a computation points at
/// the same basis.
pub type Basis<T> = Arc<GeneratorBasis<T>>;

impl<T: Real> GeneratorBasis<T> {
    pub fn new(generators: Vec<Generator<T>>) -> Result<Basis<T>> {
        for (i, g) in generators.iter().enumerate() {
            let e = g.exponent();
            match g {
                Generator::Oscillation(freq) => {
                    if !freq.is_finite() || freq.is_zero() {
                        return Err(Error::InvalidGenerator {
                            index: i,
                            re: e.re.to_f64().unwrap_or(f64::NAN),
                            im: e.im.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                }
                Generator::Decay(rate) => {
                    if !rate.is_finite() || *rate >= T::zero() {
                        return Err(Error::InvalidGenerator {
                            index: i,
                            re: e.re.to_f64().unwrap_or(f64::NAN),
                            im: e.im.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                }
            }
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                if generators[i] == generators[j] {
                    return Err(Error::DuplicateGenerator { first: i, second: j });
                }
            }
        }
        Ok(Arc::new(Self { generators }))
    }

    /// Basis with no generators; only the constant exponent 0 is admissible.
    pub fn empty() -> Basis<T> {
        Arc::new(Self { generators: vec![] })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[Generator<T>] {
        &self.generators
    }
}

/// Integer coordinates of an exponent over a [`GeneratorBasis`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreqVector(Vec<i64>);

impl FreqVector {
    pub fn new(coeffs: Vec<i64>) -> Self {
        Self(coeffs)
    }

    pub fn zero(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// Lattice admissibility: length matches, nonnegative entries on
    /// nonnegative lattices.
    pub fn validate<T: Real>(&self, basis: &GeneratorBasis<T>) -> Result<()> {
        if self.0.len() != basis.len() {
            return Err(Error::FreqVectorLength {
                expected: basis.len(),
                got: self.0.len(),
            });
        }
        for (j, (&k, g)) in self.0.iter().zip(basis.generators()).enumerate() {
            if k < 0 && !g.signed_lattice() {
                return Err(Error::LatticeViolation {
                    generator: j,
                    coefficient: k,
                });
            }
        }
        Ok(())
    }

    /// Derived exponent `μ = Σ k_j ν_j`.
    pub fn exponent<T: Real>(&self, basis: &GeneratorBasis<T>) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (&k, g) in self.0.iter().zip(basis.generators()) {
            if k != 0 {
                acc = acc + g.exponent().scale(T::of(k as f64));
            }
        }
        acc
    }

    /// Lattice point of the conjugate exponent: oscillation components flip
    /// sign, decay components are untouched.
    pub fn conj_in<T: Real>(&self, basis: &GeneratorBasis<T>) -> FreqVector {
        FreqVector(
            self.0
                .iter()
                .zip(basis.generators())
                .map(|(&k, g)| if g.signed_lattice() { -k } else { k })
                .collect(),
        )
    }

    /// Componentwise sum (exponent of a product of terms).
    pub fn add(&self, other: &FreqVector) -> FreqVector {
        FreqVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }
}
