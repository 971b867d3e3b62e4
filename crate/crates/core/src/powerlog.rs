//! Power-logarithmic functions `c · t^{e₀} · ∏_q L_q(t)^{e_q}` where
//! `L_q = ln(ln(…ln t))` iterated `q` times.
//!
//! The family is closed under differentiation, so the vanishing parameters
//! `ε_l(t)` and all their derivatives live here. Coefficients and exponents
//! are exact rationals; floating point appears only at evaluation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::Real;

pub fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rational_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rational_to<T: Real>(q: &BigRational) -> T {
    let f = q.to_f64().expect("rational fits in f64");
    T::of(f)
}

/// One power-log monomial. `t_exp` is the signed exponent on `t`; a vanishing
/// parameter `ε = ln^{a₁}t … / t^{a₀}` has `t_exp = -a₀ < 0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PowerLogMonomial {
    coeff: BigRational,
    t_exp: BigRational,
    /// Exponents on `L_1, L_2, …`; trailing zeros are trimmed.
    log_exps: Vec<BigRational>,
}

impl PowerLogMonomial {
    pub fn new(coeff: BigRational, t_exp: BigRational, mut log_exps: Vec<BigRational>) -> Self {
        while log_exps.last().is_some_and(|e| e.is_zero()) {
            log_exps.pop();
        }
        Self {
            coeff,
            t_exp,
            log_exps,
        }
    }

    /// `ε`-style constructor: `coeff · ln^{a₁}t ⋯ / t^{a₀}` with `a₀ > 0`.
    pub fn eps_style(a0: BigRational, log_exps: Vec<BigRational>) -> Result<Self> {
        if a0 <= BigRational::zero() {
            return Err(Error::NonVanishingEps {
                t_exp: (-&a0).to_string(),
            });
        }
        Ok(Self::new(BigRational::one(), -a0, log_exps))
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    pub fn t_exp(&self) -> &BigRational {
        &self.t_exp
    }

    pub fn log_exps(&self) -> &[BigRational] {
        &self.log_exps
    }

    /// Depth of the log tower actually used.
    pub fn tower_depth(&self) -> usize {
        self.log_exps.len()
    }

    fn signature(&self) -> (BigRational, Vec<BigRational>) {
        (self.t_exp.clone(), self.log_exps.clone())
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        Self {
            coeff: &self.coeff * factor,
            t_exp: self.t_exp.clone(),
            log_exps: self.log_exps.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut log_exps = self.log_exps.clone();
        if other.log_exps.len() > log_exps.len() {
            log_exps.resize(other.log_exps.len(), BigRational::zero());
        }
        for (e, o) in log_exps.iter_mut().zip(&other.log_exps) {
            *e += o;
        }
        Self::new(
            &self.coeff * &other.coeff,
            &self.t_exp + &other.t_exp,
            log_exps,
        )
    }

    /// Exact derivative. Uses `L_q' = 1/(t·L_1⋯L_{q-1})`:
    /// the power factor lowers `t_exp` by one; differentiating `L_q^{e_q}`
    /// lowers `t_exp`, each of `L_1..L_{q-1}`, and `L_q` by one, with
    /// coefficient `e_q`.
    pub fn derivative(&self) -> PowerLogSum {
        let mut out: Vec<PowerLogMonomial> = Vec::new();
        if !self.t_exp.is_zero() {
            out.push(Self::new(
                &self.coeff * &self.t_exp,
                &self.t_exp - BigRational::one(),
                self.log_exps.clone(),
            ));
        }
        for q in 0..self.log_exps.len() {
            let e_q = &self.log_exps[q];
            if e_q.is_zero() {
                continue;
            }
            let mut log_exps = self.log_exps.clone();
            for le in log_exps.iter_mut().take(q + 1) {
                *le -= BigRational::one();
            }
            out.push(Self::new(
                &self.coeff * e_q,
                &self.t_exp - BigRational::one(),
                log_exps,
            ));
        }
        PowerLogSum::from_monomials(out)
    }

    /// Whether `∫^∞ |self| dt` converges: lexicographic test on the exponent
    /// tower against `(-1, -1, …)`.
    pub fn summable_at_infinity(&self) -> bool {
        let minus_one = -BigRational::one();
        if self.t_exp < minus_one {
            return true;
        }
        if self.t_exp > minus_one {
            return false;
        }
        for e in &self.log_exps {
            if *e < minus_one {
                return true;
            }
            if *e > minus_one {
                return false;
            }
        }
        // t^{-1}·(L_1⋯L_p)^{-1} still diverges (its antiderivative is L_{p+1}).
        false
    }

    /// Smallest admissible `t` so every log in the tower is positive:
    /// `exp` iterated `tower_depth` times applied to 0 (1, e, e^e, …).
    pub fn domain_floor(&self) -> f64 {
        let mut floor = 0.0f64;
        for _ in 0..self.tower_depth() {
            floor = floor.exp();
        }
        floor
    }

    pub fn evaluate<T: Real>(&self, t: T) -> Result<T> {
        let floor = T::of(self.domain_floor());
        if !(t > floor) {
            return Err(Error::DomainViolation {
                t: t.to_f64().unwrap_or(f64::NAN),
                needed: self.domain_floor(),
            });
        }
        let mut acc = rational_to::<T>(&self.coeff) * pow_rational(t, &self.t_exp);
        let mut level = t;
        for e in &self.log_exps {
            level = level.ln();
            acc = acc * pow_rational(level, e);
        }
        Ok(acc)
    }
}

/// `x^q` for positive `x` and rational `q`.
fn pow_rational<T: Real>(x: T, q: &BigRational) -> T {
    if q.is_zero() {
        return T::one();
    }
    if q.is_integer() {
        if let Some(n) = q.to_integer().to_i32() {
            return x.powi(n);
        }
    }
    x.powf(rational_to::<T>(q))
}

/// Finite sum of power-log monomials, merged on equal exponent signatures
/// and kept in a canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerLogSum {
    monomials: Vec<PowerLogMonomial>,
}

impl PowerLogSum {
    pub fn zero() -> Self {
        Self { monomials: vec![] }
    }

    pub fn from_monomials(monomials: impl IntoIterator<Item = PowerLogMonomial>) -> Self {
        let mut merged: Vec<PowerLogMonomial> = Vec::new();
        for m in monomials {
            if let Some(existing) = merged
                .iter_mut()
                .find(|e| e.signature() == m.signature())
            {
                existing.coeff += &m.coeff;
            } else {
                merged.push(m);
            }
        }
        merged.retain(|m| !m.coeff.is_zero());
        merged.sort_by(|a, b| a.signature().cmp(&b.signature()));
        Self { monomials: merged }
    }

    pub fn monomials(&self) -> &[PowerLogMonomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn derivative(&self) -> Self {
        Self::from_monomials(
            self.monomials
                .iter()
                .flat_map(|m| m.derivative().monomials.into_iter()),
        )
    }

    /// `r`-th derivative.
    pub fn derivative_n(&self, r: usize) -> Self {
        let mut cur = self.clone();
        for _ in 0..r {
            cur = cur.derivative();
        }
        cur
    }

    pub fn evaluate<T: Real>(&self, t: T) -> Result<T> {
        let mut acc = T::zero();
        for m in &self.monomials {
            acc = acc + m.evaluate(t)?;
        }
        Ok(acc)
    }

    pub fn domain_floor(&self) -> f64 {
        self.monomials
            .iter()
            .map(|m| m.domain_floor())
            .fold(0.0, f64::max)
    }
}

impl From<PowerLogMonomial> for PowerLogSum {
    fn from(m: PowerLogMonomial) -> Self {
        Self::from_monomials([m])
    }
}

/// Float-only form of a power-log sum for hot evaluation loops. No domain
/// checks; callers must stay above the tower floor.
#[derive(Debug, Clone)]
pub struct CompiledPowerLog<T> {
    terms: Vec<(T, i32, Vec<i32>)>,
    terms_frac: Vec<(T, T, Vec<T>)>,
    depth: usize,
}

impl<T: Real> CompiledPowerLog<T> {
    pub fn eval(&self, t: T) -> T {
        let mut tower = [T::zero(); 8];
        let mut level = t;
        for slot in tower.iter_mut().take(self.depth) {
            level = level.ln();
            *slot = level;
        }
        let mut acc = T::zero();
        for (coeff, t_exp, log_exps) in &self.terms {
            let mut v = *coeff * t.powi(*t_exp);
            for (l, e) in log_exps.iter().enumerate() {
                if *e != 0 {
                    v = v * tower[l].powi(*e);
                }
            }
            acc = acc + v;
        }
        for (coeff, t_exp, log_exps) in &self.terms_frac {
            let mut v = *coeff * t.powf(*t_exp);
            for (l, e) in log_exps.iter().enumerate() {
                v = v * tower[l].powf(*e);
            }
            acc = acc + v;
        }
        acc
    }
}

impl PowerLogSum {
    /// Lower to floats, splitting integer-exponent terms onto the `powi`
    /// fast path.
    pub fn compile<T: Real>(&self) -> CompiledPowerLog<T> {
        let mut terms = Vec::new();
        let mut terms_frac = Vec::new();
        let mut depth = 0usize;
        for m in &self.monomials {
            depth = depth.max(m.tower_depth());
            let all_int = m.t_exp.is_integer() && m.log_exps.iter().all(|e| e.is_integer());
            if all_int {
                let t_exp = m.t_exp.to_integer().to_i32().unwrap_or(0);
                let log_exps = m
                    .log_exps
                    .iter()
                    .map(|e| e.to_integer().to_i32().unwrap_or(0))
                    .collect();
                terms.push((rational_to::<T>(&m.coeff), t_exp, log_exps));
            } else {
                terms_frac.push((
                    rational_to::<T>(&m.coeff),
                    rational_to::<T>(&m.t_exp),
                    m.log_exps.iter().map(rational_to::<T>).collect(),
                ));
            }
        }
        assert!(depth <= 8, "log towers deeper than 8 are not compiled");
        CompiledPowerLog {
            terms,
            terms_frac,
            depth,
        }
    }
}
