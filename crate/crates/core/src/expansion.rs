//! The expansion recursion: starting from the truncated-equation solution
//! `φ₀`, Taylor-expand the polynomial nonlinearities around `φ₀`, collect the
//! coefficient of each ν-monomial, and solve one linear system per monomial,
//! rank by rank. Right-hand sides at a given rank only involve coefficients
//! of strictly lower rank, so the construction is triangular.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::osc::{solve_system_linear, Basis, OscFn, OscMatrix, OscVector};
use crate::ranks::{leading_ranks, monomials_of_rank, EpsSet, NuMonomial};
use crate::Real;

/// Multi-index `℘ ∈ N₀ⁿ` over the state components.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        Self(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|℘| = Σ ℘_j`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn leq(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// `∏_j C(q_j, ℘_j)` — the factor turning monomial coefficients into
    /// scaled Taylor coefficients.
    pub fn binom_product(&self, lower: &Self) -> u64 {
        self.0
            .iter()
            .zip(&lower.0)
            .map(|(&q, &p)| binom(q as u64, p as u64))
            .product()
    }

    /// All multi-indices `℘ ≤ self` (componentwise).
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![vec![]];
        for &q in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (q as usize + 1));
            for prefix in &out {
                for v in 0..=q {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(MultiIndex).collect()
    }

    /// `y^℘` for a numeric state vector.
    pub fn eval_power<T: Real>(&self, y: &[T]) -> T {
        self.0
            .iter()
            .zip(y)
            .fold(T::one(), |acc, (&e, &yj)| acc * yj.powi(e as i32))
    }
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// A polynomial nonlinearity `f_l(t, y) = Σ_℘ c_℘(t)·y^℘` with oscillating
/// vector coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyNonlinearity<T: Real> {
    dim: usize,
    terms: BTreeMap<MultiIndex, OscVector<T>>,
}

impl<T: Real> PolyNonlinearity<T> {
    pub fn new(dim: usize, terms: BTreeMap<MultiIndex, OscVector<T>>) -> Result<Self> {
        for (idx, coeff) in &terms {
            if idx.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: idx.len(),
                });
            }
            if coeff.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: coeff.dim(),
                });
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, OscVector<T>> {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|p| p.order()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All `℘` with a (possibly) nonzero Taylor coefficient.
    pub fn taylor_indices(&self) -> Vec<MultiIndex> {
        let mut set = BTreeSet::new();
        for q in self.terms.keys() {
            for p in q.sub_indices() {
                set.insert(p);
            }
        }
        set.into_iter().collect()
    }

    /// `(1/℘!)·∂^℘_y f_l(t, y)` at `y = φ₀`, exact:
    /// `Σ_{q ≥ ℘} ∏C(q_j,℘_j) · c_q(t) · φ₀^{q-℘}`.
    pub fn taylor_coefficient(&self, idx: &MultiIndex, phi0: &OscVector<T>) -> Result<OscVector<T>> {
        let basis = phi0.basis();
        let mut acc = OscVector::zero(basis, self.dim);
        for (q, coeff) in &self.terms {
            if !idx.leq(q) {
                continue;
            }
            let factor = T::of(q.binom_product(idx) as f64);
            let power = vec_power(phi0, &q.sub(idx))?;
            acc = acc.add(&coeff.mul_fn(&power)?.scale_real(factor))?;
        }
        Ok(acc)
    }

    /// The Jacobian `∂f_l/∂y (t, φ₀)` assembled column-by-column from the
    /// order-one Taylor coefficients.
    pub fn jacobian_at(&self, phi0: &OscVector<T>) -> Result<OscMatrix<T>> {
        let cols = (0..self.dim)
            .map(|j| self.taylor_coefficient(&MultiIndex::unit(self.dim, j), phi0))
            .collect::<Result<Vec<_>>>()?;
        OscMatrix::from_columns(cols)
    }

    /// Numeric evaluation `f_l(t, y)`.
    pub fn evaluate_real(&self, t: T, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (q, coeff) in &self.terms {
            let yq = q.eval_power(y);
            for (o, c) in out.iter_mut().zip(coeff.components()) {
                *o = *o + c.evaluate_real(t) * yq;
            }
        }
        out
    }
}

/// `φ₀^℘` as a scalar oscillating function.
fn vec_power<T: Real>(v: &OscVector<T>, idx: &MultiIndex) -> Result<OscFn<T>> {
    let mut acc = OscFn::constant(v.basis(), T::one());
    for (j, &e) in idx.entries().iter().enumerate() {
        for _ in 0..e {
            acc = acc.mul(v.component(j))?;
        }
    }
    Ok(acc)
}

/// The quasilinear system `y' = Ay + f(t) + Σ ε_l(t) f_l(t, y)`.
#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub dim: usize,
    pub a: Vec<Vec<T>>,
    pub forcing: OscVector<T>,
    pub eps: EpsSet,
    pub nonlinearities: Vec<PolyNonlinearity<T>>,
    pub t0: T,
    /// Radius of the validity ball around `φ₀`.
    pub radius: T,
    pub delta_min: T,
}

impl<T: Real> Problem<T> {
    pub fn new(
        a: Vec<Vec<T>>,
        forcing: OscVector<T>,
        eps: EpsSet,
        nonlinearities: Vec<PolyNonlinearity<T>>,
        t0: T,
        radius: T,
        delta_min: T,
    ) -> Result<Self> {
        let dim = forcing.dim();
        if dim < 2 {
            return Err(Error::InvalidProblem(format!(
                "state dimension must be at least 2, got {dim}"
            )));
        }
        if a.len() != dim || a.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: a.len(),
            });
        }
        if nonlinearities.len() != eps.len() {
            return Err(Error::InvalidProblem(format!(
                "{} nonlinearities for {} eps parameters",
                nonlinearities.len(),
                eps.len()
            )));
        }
        for nl in &nonlinearities {
            if nl.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: nl.dim(),
                });
            }
            for coeff in nl.terms().values() {
                if coeff.basis() != forcing.basis() {
                    return Err(Error::BasisMismatch);
                }
            }
        }
        let floor = eps.domain_floor();
        if t0.to_f64().unwrap_or(f64::NAN) <= floor {
            return Err(Error::DomainViolation {
                t: t0.to_f64().unwrap_or(f64::NAN),
                needed: floor,
            });
        }
        if !(radius > T::zero()) {
            return Err(Error::InvalidProblem("domain radius must be positive".into()));
        }
        Ok(Self {
            dim,
            a,
            forcing,
            eps,
            nonlinearities,
            t0,
            radius,
            delta_min,
        })
    }

    pub fn basis(&self) -> &Basis<T> {
        self.forcing.basis()
    }

    /// Full right-hand side at `(t, y)` for numeric integration. Callers must
    /// keep `t` inside the log-tower domain.
    pub fn rhs(&self, t: T, y: &[T], out: &mut [T]) {
        for (i, row) in self.a.iter().enumerate() {
            let mut acc = T::zero();
            for (aij, yj) in row.iter().zip(y) {
                acc = acc + *aij * *yj;
            }
            out[i] = acc + self.forcing.component(i).evaluate_real(t);
        }
        for (l, nl) in self.nonlinearities.iter().enumerate() {
            if nl.is_zero() {
                continue;
            }
            let eps_val = self
                .eps
                .derivative(l + 1, 0)
                .and_then(|s| s.evaluate(t))
                .expect("t validated against the eps domain");
            let fl = nl.evaluate_real(t, y);
            for (o, v) in out.iter_mut().zip(fl) {
                *o = *o + eps_val * v;
            }
        }
    }
}

/// The in-class particular solution of the truncated system `φ' = Aφ + f`.
pub fn solve_phi0<T: Real>(p: &Problem<T>) -> Result<crate::osc::SystemSolve<T>> {
    solve_system_linear(&p.a, &p.forcing, p.delta_min)
}

/// Float-only right-hand side of a [`Problem`], for the integrator's hot
/// loop. No domain checks; callers validate the time span up front.
pub struct CompiledRhs<T> {
    dim: usize,
    a: Vec<Vec<T>>,
    forcing: Vec<crate::osc::CompiledOscFn<T>>,
    eps: Vec<crate::powerlog::CompiledPowerLog<T>>,
    /// Per `l`: list of `(state powers, per-component coefficients)`.
    nonlinearities: Vec<Vec<(Vec<u32>, Vec<crate::osc::CompiledOscFn<T>>)>>,
}

impl<T: Real> CompiledRhs<T> {
    pub fn eval(&self, t: T, y: &[T], out: &mut [T]) {
        for i in 0..self.dim {
            let mut acc = self.forcing[i].eval_real(t);
            for (aij, yj) in self.a[i].iter().zip(y) {
                acc = acc + *aij * *yj;
            }
            out[i] = acc;
        }
        for (eps, terms) in self.eps.iter().zip(&self.nonlinearities) {
            if terms.is_empty() {
                continue;
            }
            let eps_val = eps.eval(t);
            for (powers, coeffs) in terms {
                let mut yq = T::one();
                for (p, v) in powers.iter().zip(y) {
                    for _ in 0..*p {
                        yq = yq * *v;
                    }
                }
                let w = eps_val * yq;
                for (o, c) in out.iter_mut().zip(coeffs) {
                    *o = *o + w * c.eval_real(t);
                }
            }
        }
    }
}

impl<T: Real> Problem<T> {
    pub fn compile_rhs(&self) -> CompiledRhs<T> {
        CompiledRhs {
            dim: self.dim,
            a: self.a.clone(),
            forcing: self
                .forcing
                .components()
                .iter()
                .map(|f| f.compile())
                .collect(),
            eps: self
                .eps
                .specs()
                .iter()
                .map(|s| crate::powerlog::PowerLogSum::from(s.base.clone()).compile())
                .collect(),
            nonlinearities: self
                .nonlinearities
                .iter()
                .map(|nl| {
                    nl.terms()
                        .iter()
                        .map(|(idx, coeff)| {
                            (
                                idx.entries().to_vec(),
                                coeff.components().iter().map(|c| c.compile()).collect(),
                            )
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// Scalar formal series `z(t) + Σ_ν ν(t)·c_ν(t)` with oscillating
/// coefficients, used for componentwise products.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries<T: Real> {
    zeroth: OscFn<T>,
    terms: BTreeMap<NuMonomial, OscFn<T>>,
}

impl<T: Real> ScalarSeries<T> {
    pub fn one(basis: &Basis<T>) -> Self {
        Self {
            zeroth: OscFn::constant(basis, T::one()),
            terms: BTreeMap::new(),
        }
    }

    pub fn zeroth(&self) -> &OscFn<T> {
        &self.zeroth
    }

    pub fn terms(&self) -> &BTreeMap<NuMonomial, OscFn<T>> {
        &self.terms
    }

    fn insert_add(&mut self, mono: NuMonomial, f: OscFn<T>) -> Result<()> {
        match self.terms.remove(&mono) {
            Some(prev) => {
                let sum = prev.add(&f)?;
                if !sum.is_zero() {
                    self.terms.insert(mono, sum);
                }
            }
            None => {
                if !f.is_zero() {
                    self.terms.insert(mono, f);
                }
            }
        }
        Ok(())
    }

    /// Truncated product: only monomials with rank ≤ `cutoff` (when given)
    /// are retained.
    pub fn mul(&self, other: &Self, cutoff: Option<&BigRational>) -> Result<Self> {
        let mut out = Self {
            zeroth: self.zeroth.mul(&other.zeroth)?,
            terms: BTreeMap::new(),
        };
        let keep = |m: &NuMonomial| cutoff.map_or(true, |c| m.rank() <= c);
        if !other.zeroth.is_zero() {
            for (m, f) in &self.terms {
                if keep(m) {
                    out.insert_add(m.clone(), f.mul(&other.zeroth)?)?;
                }
            }
        }
        if !self.zeroth.is_zero() {
            for (m, f) in &other.terms {
                if keep(m) {
                    out.insert_add(m.clone(), f.mul(&self.zeroth)?)?;
                }
            }
        }
        for (ma, fa) in &self.terms {
            for (mb, fb) in &other.terms {
                let m = ma.multiply(mb);
                if keep(&m) {
                    out.insert_add(m, fa.mul(fb)?)?;
                }
            }
        }
        Ok(out)
    }
}

/// Vector formal series `z(t) + Σ ν_sp(t)·φ_sp(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSeries<T: Real> {
    zeroth: OscVector<T>,
    terms: BTreeMap<NuMonomial, OscVector<T>>,
    cutoff: Option<BigRational>,
}

impl<T: Real> FormalSeries<T> {
    pub fn new(
        zeroth: OscVector<T>,
        terms: BTreeMap<NuMonomial, OscVector<T>>,
        cutoff: Option<BigRational>,
    ) -> Self {
        Self {
            zeroth,
            terms,
            cutoff,
        }
    }

    pub fn zeroth(&self) -> &OscVector<T> {
        &self.zeroth
    }

    pub fn terms(&self) -> &BTreeMap<NuMonomial, OscVector<T>> {
        &self.terms
    }

    pub fn cutoff(&self) -> Option<&BigRational> {
        self.cutoff.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.zeroth.dim()
    }

    /// Component `j` as a scalar series.
    pub fn component(&self, j: usize) -> ScalarSeries<T> {
        ScalarSeries {
            zeroth: self.zeroth.component(j).clone(),
            terms: self
                .terms
                .iter()
                .filter(|(_, v)| !v.component(j).is_zero())
                .map(|(m, v)| (m.clone(), v.component(j).clone()))
                .collect(),
        }
    }

    /// `∏_j (component j)^{℘_j}` truncated at `cutoff`. Requires a zero
    /// zeroth term — the series is a deviation from `φ₀`.
    pub fn pow(&self, idx: &MultiIndex, cutoff: Option<&BigRational>) -> Result<ScalarSeries<T>> {
        if !self.zeroth.is_zero() {
            return Err(Error::NonzeroZerothTerm);
        }
        let basis = self.zeroth.basis();
        let mut acc = ScalarSeries::one(basis);
        for (j, &e) in idx.entries().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let comp = self.component(j);
            for _ in 0..e {
                acc = acc.mul(&comp, cutoff)?;
            }
        }
        Ok(acc)
    }

    /// Numeric sample `zeroth(t) + Σ ν(t)·φ_ν(t)`.
    pub fn evaluate_real(&self, eps: &EpsSet, t: T) -> Result<Vec<T>> {
        let mut acc = self.zeroth.evaluate_real(t);
        for (m, v) in &self.terms {
            let w = m.evaluate(eps, t)?;
            for (a, c) in acc.iter_mut().zip(v.components()) {
                *a = *a + w * c.evaluate_real(t);
            }
        }
        Ok(acc)
    }

    /// Numeric sample of the exact derivative:
    /// `zeroth'(t) + Σ [ν'(t)·φ_ν(t) + ν(t)·φ_ν'(t)]`.
    pub fn evaluate_derivative_real(&self, eps: &EpsSet, t: T) -> Result<Vec<T>> {
        let mut acc = self.zeroth.differentiate().evaluate_real(t);
        for (m, v) in &self.terms {
            let w = m.evaluate(eps, t)?;
            let mut wprime = T::zero();
            for (c, b) in m.derivative() {
                wprime = wprime + T::of(c as f64) * b.evaluate(eps, t)?;
            }
            for (j, a) in acc.iter_mut().enumerate() {
                *a = *a
                    + wprime * v.component(j).evaluate_real(t)
                    + w * v.component(j).differentiate().evaluate_real(t);
            }
        }
        Ok(acc)
    }

    /// Largest coefficient modulus over the whole series.
    pub fn max_coeff_norm(&self) -> T {
        let mut m = self.zeroth.max_coeff_norm();
        for v in self.terms.values() {
            m = m.max(v.max_coeff_norm());
        }
        m
    }
}

/// One solved coefficient `φ_sp` with its certificate.
#[derive(Debug, Clone)]
pub struct CoefficientRecord<T: Real> {
    /// Rank index `s` (1-based) and position `p` (1-based) in canonical order.
    pub s: usize,
    pub p: usize,
    pub monomial: NuMonomial,
    pub phi: OscVector<T>,
    /// The assembled right-hand side `g_sp`.
    pub rhs: OscVector<T>,
    /// Max coefficient modulus of `φ' - Aφ - g` after reconstruction.
    pub residual_norm: T,
    pub min_separation: T,
}

/// The computed expansion up to rank `ρ_k`.
#[derive(Debug, Clone)]
pub struct ExpansionResult<T: Real> {
    pub phi0: OscVector<T>,
    pub phi0_residual: T,
    pub phi0_min_separation: T,
    /// `ρ_1 < … < ρ_k`.
    pub ranks: Vec<BigRational>,
    /// All solved coefficients in canonical (s, p) order.
    pub records: Vec<CoefficientRecord<T>>,
    pub depth: usize,
}

impl<T: Real> ExpansionResult<T> {
    /// `ϰ_s`: number of monomials at rank index `s` (1-based).
    pub fn kappa(&self, s: usize) -> usize {
        self.records.iter().filter(|r| r.s == s).count()
    }

    /// The deviation series `δ = Σ ν_sp φ_sp` truncated at rank index `upto`.
    pub fn delta_series(&self, upto: usize) -> Result<FormalSeries<T>> {
        if upto > self.depth {
            return Err(Error::DepthExceeded {
                requested: upto,
                built: self.depth,
            });
        }
        let basis = self.phi0.basis();
        let dim = self.phi0.dim();
        let mut terms = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.s <= upto) {
            terms.insert(r.monomial.clone(), r.phi.clone());
        }
        let cutoff = if upto == 0 {
            None
        } else {
            Some(self.ranks[upto - 1].clone())
        };
        Ok(FormalSeries::new(
            OscVector::zero(basis, dim),
            terms,
            cutoff,
        ))
    }

    /// The truncated sum `s(t) = φ₀ + Σ_{s ≤ upto} ν_sp φ_sp` as a series.
    pub fn truncated_sum(&self, upto: usize) -> Result<FormalSeries<T>> {
        let delta = self.delta_series(upto)?;
        Ok(FormalSeries::new(
            self.phi0.clone(),
            delta.terms,
            delta.cutoff,
        ))
    }
}

/// Build `φ₀` and all `φ_sp` with rank index `s ≤ k`.
pub fn build_expansion<T: Real>(p: &Problem<T>, k: usize) -> Result<ExpansionResult<T>> {
    let phi0_solve = solve_phi0(p)?;
    let phi0 = phi0_solve.solution;
    let basis = p.basis();
    let dim = p.dim;

    let ranks = leading_ranks(&p.eps, k);
    if ranks.len() < k {
        return Err(Error::DepthExceeded {
            requested: k,
            built: ranks.len(),
        });
    }

    // Taylor coefficients (1/℘!)∂^℘f_l(t, φ₀) are shared across ranks.
    let mut taylor: BTreeMap<(usize, MultiIndex), OscVector<T>> = BTreeMap::new();
    for (l, nl) in p.nonlinearities.iter().enumerate() {
        for idx in nl.taylor_indices() {
            let c = nl.taylor_coefficient(&idx, &phi0)?;
            if !c.is_zero() {
                taylor.insert((l + 1, idx), c);
            }
        }
    }

    let mut records: Vec<CoefficientRecord<T>> = Vec::new();
    let mut delta = FormalSeries::new(OscVector::zero(basis, dim), BTreeMap::new(), None);

    for (s_idx, rho) in ranks.iter().enumerate() {
        let s = s_idx + 1;
        let mut g: BTreeMap<NuMonomial, OscVector<T>> = BTreeMap::new();

        // Taylor part: coefficient of each rank-ρ monomial in
        // Σ_l ε_l · Σ_℘ T_{l℘} δ^℘.
        for ((l, idx), coeff) in &taylor {
            let eps_mono = NuMonomial::eps(&p.eps, *l)?;
            let head = eps_mono.rank().clone();
            if &head > rho {
                continue;
            }
            let budget = rho - &head;
            let pow = delta.pow(idx, Some(&budget))?;
            // ℘ = 0 contributes through the zeroth slot.
            if !pow.zeroth().is_zero() && head == *rho {
                accumulate(&mut g, eps_mono.clone(), coeff.mul_fn(pow.zeroth())?)?;
            }
            for (m, f) in pow.terms() {
                let target = eps_mono.multiply(m);
                if target.rank() == rho {
                    accumulate(&mut g, target, coeff.mul_fn(f)?)?;
                }
            }
        }

        // Derivative part: -Σ dν/dt·φ contributions land one rank higher
        // than their source.
        for rec in &records {
            if &(rec.monomial.rank() + BigRational::from_integer(1.into())) != rho {
                continue;
            }
            for (c, branch) in rec.monomial.derivative() {
                accumulate(
                    &mut g,
                    branch,
                    rec.phi.scale_real(-T::of(c as f64)),
                )?;
            }
        }

        for (p_idx, mono) in monomials_of_rank(&p.eps, rho).into_iter().enumerate() {
            let rhs = g
                .remove(&mono)
                .unwrap_or_else(|| OscVector::zero(basis, dim));
            let solve = solve_system_linear(&p.a, &rhs, p.delta_min).map_err(|e| {
                Error::ExpansionSolveFailed {
                    s,
                    p: p_idx + 1,
                    source: Box::new(e),
                }
            })?;
            delta
                .terms
                .insert(mono.clone(), solve.solution.clone());
            records.push(CoefficientRecord {
                s,
                p: p_idx + 1,
                monomial: mono,
                phi: solve.solution,
                rhs,
                residual_norm: solve.residual_norm,
                min_separation: solve.min_separation,
            });
        }
    }

    Ok(ExpansionResult {
        phi0,
        phi0_residual: phi0_solve.residual_norm,
        phi0_min_separation: phi0_solve.min_separation,
        ranks,
        records,
        depth: k,
    })
}

fn accumulate<T: Real>(
    g: &mut BTreeMap<NuMonomial, OscVector<T>>,
    mono: NuMonomial,
    v: OscVector<T>,
) -> Result<()> {
    match g.remove(&mono) {
        Some(prev) => {
            let sum = prev.add(&v)?;
            g.insert(mono, sum);
        }
        None => {
            g.insert(mono, v);
        }
    }
    Ok(())
}

/// The exact residual of the truncated sum as a formal series:
/// `g = -s' + A s + f + Σ_l ε_l f_l(t, s)` with all products carried out
/// symbolically. Terms of rank ≤ ρ_k cancel by construction (up to pruning
/// noise); what survives starts at rank ρ_{k+1}.
pub fn residual_series<T: Real>(
    p: &Problem<T>,
    e: &ExpansionResult<T>,
    upto: usize,
) -> Result<FormalSeries<T>> {
    let delta = e.delta_series(upto)?;

    // Rank-0 slot: -φ₀' + Aφ₀ + f (zero up to pruning noise).
    let zeroth = e
        .phi0
        .differentiate()
        .negate()
        .add(&e.phi0.apply_real_matrix(&p.a)?)?
        .add(&p.forcing)?;

    let mut terms: BTreeMap<NuMonomial, OscVector<T>> = BTreeMap::new();

    // -s' + As over the series part: ν·(Aφ - φ') - ν'·φ.
    for (mono, phi) in delta.terms() {
        accumulate(
            &mut terms,
            mono.clone(),
            phi.apply_real_matrix(&p.a)?.sub(&phi.differentiate())?,
        )?;
        for (c, branch) in mono.derivative() {
            accumulate(&mut terms, branch, phi.scale_real(-T::of(c as f64)))?;
        }
    }

    // Σ_l ε_l f_l(t, s) expanded exactly: f_l is a polynomial, so the Taylor
    // sum around φ₀ terminates.
    for (l, nl) in p.nonlinearities.iter().enumerate() {
        if nl.is_zero() {
            continue;
        }
        let eps_mono = NuMonomial::eps(&p.eps, l + 1)?;
        for idx in nl.taylor_indices() {
            let coeff = nl.taylor_coefficient(&idx, &e.phi0)?;
            if coeff.is_zero() {
                continue;
            }
            let pow = delta.pow(&idx, None)?;
            if !pow.zeroth().is_zero() {
                accumulate(
                    &mut terms,
                    eps_mono.clone(),
                    coeff.mul_fn(pow.zeroth())?,
                )?;
            }
            for (m, f) in pow.terms() {
                accumulate(&mut terms, eps_mono.multiply(m), coeff.mul_fn(f)?)?;
            }
        }
    }

    terms.retain(|_, v| !v.is_zero());
    Ok(FormalSeries::new(zeroth, terms, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osc::{Generator, GeneratorBasis};
    use crate::powerlog::{rational_int, PowerLogMonomial};
    use crate::ranks::EpsSpec;
    use num_traits::Zero;

    fn osc_basis() -> Basis<f64> {
        GeneratorBasis::new(vec![
            Generator::Oscillation(1.0),
            Generator::Oscillation(std::f64::consts::E),
            Generator::Oscillation(std::f64::consts::PI),
            Generator::Oscillation(2.0f64.sqrt()),
        ])
        .unwrap()
    }

    fn k(c: &[i64]) -> crate::osc::FreqVector {
        crate::osc::FreqVector::new(c.to_vec())
    }

    fn eps_set() -> EpsSet {
        EpsSet::new(vec![
            EpsSpec::new(
                1,
                PowerLogMonomial::eps_style(rational_int(1), vec![]).unwrap(),
            )
            .unwrap(),
            EpsSpec::new(
                2,
                PowerLogMonomial::eps_style(rational_int(1), vec![rational_int(-1)]).unwrap(),
            )
            .unwrap(),
        ])
        .unwrap()
    }

    /// The worked fixture: A = diag(-1,-2), f = (sin t, cos e t),
    /// f₁ = (y₁ + y₂²·cos πt, y₂), f₂ = (y₂, y₁ + y₁y₂·sin √2 t).
    fn fixture() -> Problem<f64> {
        let b = osc_basis();
        let a = vec![vec![-1.0, 0.0], vec![0.0, -2.0]];
        let f = OscVector::new(vec![
            OscFn::sin(&b, k(&[1, 0, 0, 0])).unwrap(),
            OscFn::cos(&b, k(&[0, 1, 0, 0])).unwrap(),
        ])
        .unwrap();
        let one = OscFn::constant(&b, 1.0);
        let zero = OscFn::zero(&b);
        let g1 = OscFn::cos(&b, k(&[0, 0, 1, 0])).unwrap();
        let g2 = OscFn::sin(&b, k(&[0, 0, 0, 1])).unwrap();

        let nl1 = PolyNonlinearity::new(
            2,
            BTreeMap::from([
                (
                    MultiIndex::new(vec![1, 0]),
                    OscVector::new(vec![one.clone(), zero.clone()]).unwrap(),
                ),
                (
                    MultiIndex::new(vec![0, 1]),
                    OscVector::new(vec![zero.clone(), one.clone()]).unwrap(),
                ),
                (
                    MultiIndex::new(vec![0, 2]),
                    OscVector::new(vec![g1, zero.clone()]).unwrap(),
                ),
            ]),
        )
        .unwrap();
        let nl2 = PolyNonlinearity::new(
            2,
            BTreeMap::from([
                (
                    MultiIndex::new(vec![1, 0]),
                    OscVector::new(vec![zero.clone(), one.clone()]).unwrap(),
                ),
                (
                    MultiIndex::new(vec![0, 1]),
                    OscVector::new(vec![one.clone(), zero.clone()]).unwrap(),
                ),
                (
                    MultiIndex::new(vec![1, 1]),
                    OscVector::new(vec![zero.clone(), g2]).unwrap(),
                ),
            ]),
        )
        .unwrap();

        Problem::new(
            a,
            f,
            eps_set(),
            vec![nl1, nl2],
            100.0,
            20.0,
            crate::consts::DELTA_MIN,
        )
        .unwrap()
    }

    #[test]
    fn multi_index_basics() {
        let q = MultiIndex::new(vec![2, 1]);
        assert_eq!(q.order(), 3);
        assert_eq!(q.sub_indices().len(), 6);
        let p = MultiIndex::new(vec![1, 0]);
        assert!(p.leq(&q));
        assert_eq!(q.binom_product(&p), 2);
        assert_eq!(q.sub(&p), MultiIndex::new(vec![1, 1]));
        assert_eq!(MultiIndex::new(vec![2, 3]).eval_power(&[2.0, 1.0]), 4.0);
    }

    #[test]
    fn taylor_coefficient_examples() {
        let b = osc_basis();
        let one = OscFn::constant(&b, 1.0);
        let zero = OscFn::zero(&b);
        let g = OscFn::cos(&b, k(&[0, 0, 1, 0])).unwrap();
        // nl = g(t)·y₂² in the first component.
        let nl = PolyNonlinearity::new(
            2,
            BTreeMap::from([(
                MultiIndex::new(vec![0, 2]),
                OscVector::new(vec![g.clone(), zero.clone()]).unwrap(),
            )]),
        )
        .unwrap();
        let phi0 = OscVector::new(vec![
            OscFn::sin(&b, k(&[1, 0, 0, 0])).unwrap(),
            OscFn::cos(&b, k(&[0, 1, 0, 0])).unwrap(),
        ])
        .unwrap();

        // ℘ = (0,2): second derivative of the square recovers g itself.
        let t2 = nl
            .taylor_coefficient(&MultiIndex::new(vec![0, 2]), &phi0)
            .unwrap();
        assert_eq!(t2.component(0), &g);
        assert!(t2.component(1).is_zero());

        // ℘ = (0,1): 2·(φ₀)₂·g.
        let t1 = nl
            .taylor_coefficient(&MultiIndex::new(vec![0, 1]), &phi0)
            .unwrap();
        let want = phi0.component(1).mul(&g).unwrap().scale_real(2.0);
        assert_eq!(t1.component(0), &want);

        // ℘ = (1,1) on nl = y₁y₂: coefficient unchanged.
        let nl2 = PolyNonlinearity::new(
            2,
            BTreeMap::from([(
                MultiIndex::new(vec![1, 1]),
                OscVector::new(vec![zero.clone(), one.clone()]).unwrap(),
            )]),
        )
        .unwrap();
        let t11 = nl2
            .taylor_coefficient(&MultiIndex::new(vec![1, 1]), &phi0)
            .unwrap();
        assert!(t11.component(0).is_zero());
        assert_eq!(t11.component(1), &one);

        // Orders beyond the degree vanish.
        let t3 = nl
            .taylor_coefficient(&MultiIndex::new(vec![0, 3]), &phi0)
            .unwrap();
        assert!(t3.is_zero());
    }

    #[test]
    fn taylor_matches_multivariate_finite_differences() {
        let p = fixture();
        let phi0 = solve_phi0(&p).unwrap().solution;
        let nl = &p.nonlinearities[0];
        let t = 3.7;
        let y0 = phi0.evaluate_real(t);
        // ∂f/∂y₂ at φ₀(t) by central differences, against the ℘=(0,1) Taylor
        // coefficient (order one: equals the partial derivative).
        let idx = MultiIndex::new(vec![0, 1]);
        let sym = nl.taylor_coefficient(&idx, &phi0).unwrap();
        let h = 1e-6;
        let mut yp = y0.clone();
        let mut ym = y0.clone();
        yp[1] += h;
        ym[1] -= h;
        let fp = nl.evaluate_real(t, &yp);
        let fm = nl.evaluate_real(t, &ym);
        for i in 0..2 {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            let sv = sym.component(i).evaluate_real(t);
            assert!((fd - sv).abs() < 1e-6, "component {i}: {fd} vs {sv}");
        }
    }

    #[test]
    fn series_pow_examples() {
        let p = fixture();
        let e = build_expansion(&p, 1).unwrap();
        let delta = e.delta_series(1).unwrap();

        // ℘ = 0 is the constant-1 series.
        let one = delta.pow(&MultiIndex::zero(2), None).unwrap();
        assert_eq!(one.zeroth(), &OscFn::constant(p.basis(), 1.0));
        assert!(one.terms().is_empty());

        // ℘ = e_j returns component j unchanged.
        let comp = delta.pow(&MultiIndex::unit(2, 0), None).unwrap();
        assert_eq!(&delta.component(0), &comp);

        // Square of component 0 of δ = ε₁φ₁₁ + ε₂φ₁₂: monomials
        // {ε₁², ε₁ε₂, ε₂²} with convolved coefficients.
        let sq = delta.pow(&MultiIndex::new(vec![2, 0]), None).unwrap();
        assert!(sq.zeroth().is_zero());
        assert_eq!(sq.terms().len(), 3);
        let phi11 = &e.records[0].phi;
        let phi12 = &e.records[1].phi;
        let e1 = NuMonomial::eps(&p.eps, 1).unwrap();
        let e2 = NuMonomial::eps(&p.eps, 2).unwrap();
        let want_cross = phi11
            .component(0)
            .mul(phi12.component(0))
            .unwrap()
            .scale_real(2.0);
        assert_eq!(sq.terms()[&e1.multiply(&e2)], want_cross);
        let want_sq = phi11.component(0).mul(phi11.component(0)).unwrap();
        assert_eq!(sq.terms()[&e1.multiply(&e1)], want_sq);

        // Nonzero zeroth term is rejected.
        let s = e.truncated_sum(1).unwrap();
        assert_eq!(
            s.pow(&MultiIndex::zero(2), None).err(),
            Some(Error::NonzeroZerothTerm)
        );
    }

    #[test]
    fn rank_one_rhs_is_the_nonlinearity_at_phi0() {
        let p = fixture();
        let e = build_expansion(&p, 1).unwrap();
        let phi0 = &e.phi0;
        assert_eq!(e.records.len(), 2);
        for (idx, rec) in e.records.iter().enumerate() {
            let nl = &p.nonlinearities[idx];
            let want = nl
                .taylor_coefficient(&MultiIndex::zero(2), phi0)
                .unwrap();
            assert_eq!(rec.rhs, want, "g_1{} must equal f_l(t, φ₀)", idx + 1);
            assert!(rec.residual_norm < 1e-10);
        }
    }

    #[test]
    fn zero_problem_has_zero_expansion() {
        let b = osc_basis();
        let p = Problem::new(
            vec![vec![-1.0, 0.0], vec![0.0, -2.0]],
            OscVector::zero(&b, 2),
            eps_set(),
            vec![PolyNonlinearity::zero(2), PolyNonlinearity::zero(2)],
            100.0,
            20.0,
            crate::consts::DELTA_MIN,
        )
        .unwrap();
        let e = build_expansion(&p, 2).unwrap();
        assert!(e.phi0.is_zero());
        assert!(e.records.iter().all(|r| r.phi.is_zero()));
        let s = e.truncated_sum(1).unwrap();
        assert!(s.evaluate_real(&p.eps, 200.0).unwrap().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn triangularity_and_depth() {
        let p = fixture();
        let e = build_expansion(&p, 2).unwrap();
        assert_eq!(e.kappa(1), 2);
        assert_eq!(e.kappa(2), 5);
        // Monotone rank order along the record list.
        for w in e.records.windows(2) {
            assert!(w[0].monomial.rank() <= w[1].monomial.rank());
        }
        assert!(e.delta_series(3).is_err());
    }

    #[test]
    fn determinism() {
        let p = fixture();
        let e1 = build_expansion(&p, 2).unwrap();
        let e2 = build_expansion(&p, 2).unwrap();
        assert_eq!(format!("{:?}", e1.records.last().unwrap().phi), format!(
            "{:?}",
            e2.records.last().unwrap().phi
        ));
        assert_eq!(e1.phi0, e2.phi0);
        for (a, b) in e1.records.iter().zip(&e2.records) {
            assert_eq!(a.phi, b.phi);
            assert_eq!(a.rhs, b.rhs);
        }
    }

    #[test]
    fn residual_series_cancels_low_ranks() {
        let p = fixture();
        let e = build_expansion(&p, 2).unwrap();
        let g = residual_series(&p, &e, 2).unwrap();
        // Rank-0 slot and all ranks ≤ 2 cancel to pruning noise.
        assert!(g.zeroth().max_coeff_norm() < 1e-10);
        for (m, v) in g.terms() {
            if m.rank() <= &rational_int(2) {
                assert!(
                    v.max_coeff_norm() < 1e-10,
                    "rank {} term survived with norm {}",
                    m.rank(),
                    v.max_coeff_norm()
                );
            }
        }
        // Something survives at rank 3.
        assert!(g
            .terms()
            .iter()
            .any(|(m, v)| m.rank() == &rational_int(3) && v.max_coeff_norm() > 1e-6));
    }

    #[test]
    fn truncated_sum_derivative_matches_finite_differences() {
        let p = fixture();
        let e = build_expansion(&p, 2).unwrap();
        let s = e.truncated_sum(2).unwrap();
        let t = 1000.0;
        let h = 5e-3;
        let sym = s.evaluate_derivative_real(&p.eps, t).unwrap();
        // 5-point first-derivative stencil.
        let f = |x: f64| s.evaluate_real(&p.eps, x).unwrap();
        let (m2, m1, p1, p2) = (f(t - 2.0 * h), f(t - h), f(t + h), f(t + 2.0 * h));
        for i in 0..2 {
            let fd = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
            assert!(
                (fd - sym[i]).abs() / sym[i].abs().max(1e-6) < 1e-6,
                "component {i}: fd {fd} vs sym {}",
                sym[i]
            );
        }
    }
}
