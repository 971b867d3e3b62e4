//! Rank bookkeeping for the vanishing parameters `ε_l(t)`.
//!
//! Each `ε_l` carries a positive rational rank `ϱ_l`; a ν-monomial
//! `∏ (d^r ε_l / dt^r)^{β_lr}` has rank `Σ (ϱ_l + r)·β_lr`. The countable
//! rank set `R` is enumerated exactly, monomials of a given rank are listed
//! in a canonical order, and differentiation raises the rank of every
//! resulting branch by exactly one.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::powerlog::{PowerLogMonomial, PowerLogSum};
use crate::Real;

/// One vanishing parameter: a single power-log monomial with a positive
/// power of `1/t`, plus its rank (defaults to that power).
#[derive(Debug, Clone, PartialEq)]
pub struct EpsSpec {
    /// 1-based index `l`.
    pub index: usize,
    pub base: PowerLogMonomial,
    pub rank: BigRational,
}

impl EpsSpec {
    pub fn new(index: usize, base: PowerLogMonomial) -> Result<Self> {
        let rank = -base.t_exp().clone();
        Self::with_rank(index, base, rank)
    }

    pub fn with_rank(index: usize, base: PowerLogMonomial, rank: BigRational) -> Result<Self> {
        if !base.t_exp().is_negative() {
            return Err(Error::NonVanishingEps {
                t_exp: base.t_exp().to_string(),
            });
        }
        if !rank.is_positive() {
            return Err(Error::NonPositiveRank {
                rank: rank.to_string(),
            });
        }
        Ok(Self { index, base, rank })
    }
}

/// The ordered family `ε_1, …, ε_m` with nondecreasing ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsSet {
    specs: Vec<EpsSpec>,
}

impl EpsSet {
    pub fn new(specs: Vec<EpsSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidProblem("at least one eps required".into()));
        }
        for (i, s) in specs.iter().enumerate() {
            if s.index != i + 1 {
                return Err(Error::InvalidProblem(format!(
                    "eps indices must be 1..m in order, got {} at position {}",
                    s.index,
                    i + 1
                )));
            }
            if i > 0 && s.rank < specs[i - 1].rank {
                return Err(Error::RankOrdering {
                    index: s.index,
                    rank: s.rank.to_string(),
                    previous: specs[i - 1].rank.to_string(),
                });
            }
        }
        Ok(Self { specs })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[EpsSpec] {
        &self.specs
    }

    /// `ε_l` by 1-based index.
    pub fn spec(&self, l: usize) -> Result<&EpsSpec> {
        self.specs.get(l - 1).ok_or(Error::UnknownEpsIndex {
            index: l,
            available: self.specs.len(),
        })
    }

    pub fn rank(&self, l: usize) -> Result<&BigRational> {
        Ok(&self.spec(l)?.rank)
    }

    /// The minimal rank `ϱ_1`.
    pub fn min_rank(&self) -> &BigRational {
        &self.specs[0].rank
    }

    /// Exact symbolic `d^r ε_l / dt^r`.
    pub fn derivative(&self, l: usize, r: usize) -> Result<PowerLogSum> {
        let spec = self.spec(l)?;
        Ok(PowerLogSum::from(spec.base.clone()).derivative_n(r))
    }

    /// Smallest admissible evaluation point over the whole family.
    pub fn domain_floor(&self) -> f64 {
        self.specs
            .iter()
            .map(|s| s.base.domain_floor())
            .fold(0.0, f64::max)
    }
}

/// A product `∏ (d^r ε_l/dt^r)^{β_lr}` identified by its exponent table.
/// Keys are `(l, r)` with 1-based `l`; at least one exponent is positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NuMonomial {
    exps: BTreeMap<(usize, usize), u32>,
    rank: BigRational,
}

impl NuMonomial {
    pub fn new(eps: &EpsSet, exps: BTreeMap<(usize, usize), u32>) -> Result<Self> {
        let exps: BTreeMap<_, _> = exps.into_iter().filter(|&(_, beta)| beta > 0).collect();
        if exps.is_empty() {
            return Err(Error::EmptyMonomial);
        }
        let mut rank = BigRational::zero();
        for (&(l, r), &beta) in &exps {
            let rho = eps.rank(l)?;
            rank += (rho + BigRational::from_integer(r.into()))
                * BigRational::from_integer(beta.into());
        }
        Ok(Self { exps, rank })
    }

    /// The bare parameter `ε_l`.
    pub fn eps(eps: &EpsSet, l: usize) -> Result<Self> {
        Self::new(eps, BTreeMap::from([((l, 0), 1)]))
    }

    /// `d^r ε_l / dt^r` as a monomial.
    pub fn eps_derivative(eps: &EpsSet, l: usize, r: usize) -> Result<Self> {
        Self::new(eps, BTreeMap::from([((l, r), 1)]))
    }

    pub fn exponents(&self) -> &BTreeMap<(usize, usize), u32> {
        &self.exps
    }

    /// `Σ (ϱ_l + r)·β_lr`, exact.
    pub fn rank(&self) -> &BigRational {
        &self.rank
    }

    /// Total degree `Σ β_lr`.
    pub fn degree(&self) -> u32 {
        self.exps.values().sum()
    }

    /// Highest derivative order of `ε_l` appearing, if any.
    pub fn max_derivative_order(&self, l: usize) -> Option<usize> {
        self.exps
            .keys()
            .filter(|&&(ll, _)| ll == l)
            .map(|&(_, r)| r)
            .max()
    }

    /// Exponent tables add; ranks add.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut exps = self.exps.clone();
        for (&key, &beta) in &other.exps {
            *exps.entry(key).or_insert(0) += beta;
        }
        Self {
            exps,
            rank: &self.rank + &other.rank,
        }
    }

    /// Product rule: each branch replaces one factor `(ε_l^{(r)})^{β}` by
    /// `(ε_l^{(r)})^{β-1}·ε_l^{(r+1)}` with coefficient `β`. Every branch has
    /// rank exactly `rank + 1`.
    pub fn derivative(&self) -> Vec<(u32, NuMonomial)> {
        let mut out = Vec::with_capacity(self.exps.len());
        for (&(l, r), &beta) in &self.exps {
            let mut exps = self.exps.clone();
            if beta == 1 {
                exps.remove(&(l, r));
            } else {
                exps.insert((l, r), beta - 1);
            }
            *exps.entry((l, r + 1)).or_insert(0) += 1;
            out.push((
                beta,
                NuMonomial {
                    exps,
                    rank: &self.rank + BigRational::from_integer(1.into()),
                },
            ));
        }
        out
    }

    /// `∏ (eval d^r ε_l/dt^r at t)^{β_lr}`.
    pub fn evaluate<T: Real>(&self, eps: &EpsSet, t: T) -> Result<T> {
        let mut acc = T::one();
        for (&(l, r), &beta) in &self.exps {
            let v = eps.derivative(l, r)?.evaluate(t)?;
            acc = acc * v.powi(beta as i32);
        }
        Ok(acc)
    }
}

// Canonical order: by rank, then lexicographic on the exponent table
// (sorted (l, r, β) triples). This fixes the paper's free renumbering choice.
impl Ord for NuMonomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank
            .cmp(&other.rank)
            .then_with(|| self.exps.cmp(&other.exps))
    }
}

impl PartialOrd for NuMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for NuMonomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (&(l, r), &beta) in &self.exps {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "eps{l}")?;
            if r > 0 {
                write!(f, "^({r})")?;
            }
            if beta > 1 {
                write!(f, "**{beta}")?;
            }
        }
        Ok(())
    }
}

/// All distinct achievable ranks `≤ rho_max`, ascending. Empty when
/// `rho_max < ϱ_1`.
pub fn enumerate_ranks(eps: &EpsSet, rho_max: &BigRational) -> Vec<BigRational> {
    // Weights (ϱ_l + r) ≤ rho_max, each usable any number of times.
    let mut weights: Vec<BigRational> = Vec::new();
    for spec in eps.specs() {
        let mut w = spec.rank.clone();
        while &w <= rho_max {
            weights.push(w.clone());
            w += BigRational::from_integer(1.into());
        }
    }
    let mut sums: BTreeSet<BigRational> = BTreeSet::new();
    sums.insert(BigRational::zero());
    for w in &weights {
        // Closure under adding w while staying ≤ rho_max.
        let mut frontier: Vec<BigRational> = sums.iter().cloned().collect();
        while let Some(s) = frontier.pop() {
            let next = &s + w;
            if &next <= rho_max && sums.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    sums.remove(&BigRational::zero());
    sums.into_iter().collect()
}

/// The first `k` elements of the rank set `R` (`ρ_1 < ρ_2 < …`). The k-th
/// rank never exceeds `k·ϱ_1` because multiples of `ϱ_1` are achievable.
pub fn leading_ranks(eps: &EpsSet, k: usize) -> Vec<BigRational> {
    if k == 0 {
        return vec![];
    }
    let bound = eps.min_rank() * BigRational::from_integer((k as i64).into());
    let mut all = enumerate_ranks(eps, &bound);
    all.truncate(k);
    all
}

/// Every ν-monomial with rank exactly `rho`, in canonical order. Derivative
/// orders are bounded by `⌊rho - ϱ_l⌋`. Empty when `rho` is unachievable.
pub fn monomials_of_rank(eps: &EpsSet, rho: &BigRational) -> Vec<NuMonomial> {
    // Candidate factors in deterministic order.
    let mut factors: Vec<((usize, usize), BigRational)> = Vec::new();
    for spec in eps.specs() {
        let cap = floor_big(&(rho - &spec.rank));
        if cap < 0 {
            continue;
        }
        for r in 0..=(cap as usize) {
            factors.push((
                (spec.index, r),
                &spec.rank + BigRational::from_integer((r as i64).into()),
            ));
        }
    }
    let mut out = Vec::new();
    let mut table: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    search(eps, &factors, 0, rho.clone(), &mut table, &mut out);
    out.sort();
    out
}

fn search(
    eps: &EpsSet,
    factors: &[((usize, usize), BigRational)],
    pos: usize,
    remaining: BigRational,
    table: &mut BTreeMap<(usize, usize), u32>,
    out: &mut Vec<NuMonomial>,
) {
    if remaining.is_zero() {
        if !table.is_empty() {
            out.push(NuMonomial::new(eps, table.clone()).expect("nonempty table"));
        }
        return;
    }
    if pos == factors.len() || remaining.is_negative() {
        return;
    }
    let (key, weight) = &factors[pos];
    let max_beta = floor_big(&(&remaining / weight));
    for beta in (0..=max_beta.max(0) as u32).rev() {
        if beta > 0 {
            table.insert(*key, beta);
        } else {
            table.remove(key);
        }
        let used = weight * BigRational::from_integer((beta as i64).into());
        search(eps, factors, pos + 1, &remaining - used, table, out);
    }
    table.remove(key);
}

fn floor_big(q: &BigRational) -> i64 {
    q.floor().to_integer().to_i64().expect("rank fits in i64")
}
