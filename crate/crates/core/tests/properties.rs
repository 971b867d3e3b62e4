//! Property tests: ring laws of the exponential-sum algebra and the rank
//! laws of the monomial calculus.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use oscex_core::osc::{Basis, FreqVector, Generator, GeneratorBasis, OscFn};
use oscex_core::powerlog::{rational, rational_int, PowerLogMonomial};
use oscex_core::ranks::{enumerate_ranks, monomials_of_rank, EpsSet, EpsSpec, NuMonomial};
use proptest::prelude::*;

fn mixed_basis() -> Basis<f64> {
    GeneratorBasis::new(vec![
        Generator::Oscillation(1.0),
        Generator::Oscillation(2.0f64.sqrt()),
        Generator::Decay(-1.3),
    ])
    .unwrap()
}

prop_compose! {
    fn arb_osc_fn()(
        terms in prop::collection::vec(
            ((-3i64..=3, -3i64..=3, 0i64..=2), (-2.0f64..2.0, -2.0f64..2.0)),
            0..5,
        )
    ) -> OscFn<f64> {
        let basis = mixed_basis();
        OscFn::from_terms(
            &basis,
            terms.into_iter().map(|((k1, k2, k3), (re, im))| {
                (FreqVector::new(vec![k1, k2, k3]), Complex::new(re, im))
            }),
        )
        .unwrap()
    }
}

fn close(a: &OscFn<f64>, b: &OscFn<f64>, tol: f64) -> bool {
    a.sub(b).unwrap().max_coeff_norm() <= tol
}

proptest! {
    #[test]
    fn addition_commutes(a in arb_osc_fn(), b in arb_osc_fn()) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
    }

    #[test]
    fn addition_associates(a in arb_osc_fn(), b in arb_osc_fn(), c in arb_osc_fn()) {
        let lhs = a.add(&b).unwrap().add(&c).unwrap();
        let rhs = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn multiplication_commutes(a in arb_osc_fn(), b in arb_osc_fn()) {
        let lhs = a.mul(&b).unwrap();
        let rhs = b.mul(&a).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn multiplication_associates(a in arb_osc_fn(), b in arb_osc_fn(), c in arb_osc_fn()) {
        let lhs = a.mul(&b).unwrap().mul(&c).unwrap();
        let rhs = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }

    #[test]
    fn multiplication_distributes(a in arb_osc_fn(), b in arb_osc_fn(), c in arb_osc_fn()) {
        let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
        let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }

    #[test]
    fn product_rule_is_exact(a in arb_osc_fn(), b in arb_osc_fn()) {
        let lhs = a.mul(&b).unwrap().differentiate();
        let rhs = a
            .differentiate()
            .mul(&b)
            .unwrap()
            .add(&a.mul(&b.differentiate()).unwrap())
            .unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }

    #[test]
    fn fourier_coefficient_reads_back(a in arb_osc_fn(), k1 in -3i64..=3, k2 in -3i64..=3) {
        // mean(f · e^{-μt}) picks the stored coefficient at μ's lattice point
        // for purely oscillatory μ.
        let basis = mixed_basis();
        let key = FreqVector::new(vec![k1, k2, 0]);
        let probe = OscFn::exp_term(
            &basis,
            key.conj_in(&basis),
            Complex::new(1.0, 0.0),
        )
        .unwrap();
        let read = a.mul(&probe).unwrap().mean_value();
        // Decay terms of `a` shifted by the probe stay off the zero point,
        // except pairs that cancel the oscillation but keep decay; those have
        // nonzero decay exponent and do not land on the zero tuple either.
        prop_assert!((read - a.coefficient(&key)).norm() <= 1e-12);
    }

    #[test]
    fn pointwise_agreement(
        a in arb_osc_fn(),
        b in arb_osc_fn(),
        seed in 0u64..u64::MAX,
    ) {
        // evaluate(symbolic product/sum) vs arithmetic on evaluations,
        // 32 pseudo-random t in [0, 50].
        let sum = a.add(&b).unwrap();
        let prod = a.mul(&b).unwrap();
        let diff = a.differentiate();
        let mut state = seed | 1;
        for _ in 0..32 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let t = (state >> 11) as f64 / (1u64 << 53) as f64 * 50.0;
            let av = a.evaluate(t);
            let bv = b.evaluate(t);
            let scale = 1.0 + av.norm().max(bv.norm()).powi(2);
            prop_assert!((sum.evaluate(t) - (av + bv)).norm() <= 1e-10 * scale);
            prop_assert!((prod.evaluate(t) - av * bv).norm() <= 1e-10 * scale);
            // Derivative against a central difference at modest accuracy.
            let h = 1e-6;
            let fd = (a.evaluate(t + h) - a.evaluate(t - h)) / Complex::new(2.0 * h, 0.0);
            prop_assert!((diff.evaluate(t) - fd).norm() <= 1e-4 * scale);
        }
    }
}

// Rank calculus properties.

fn arb_eps_set() -> impl Strategy<Value = EpsSet> {
    // Ascending rational ranks out of a small menu, m ≤ 3.
    let menu = [
        rational_int(1),
        rational(5, 4),
        rational(3, 2),
        rational_int(2),
        rational(5, 2),
        rational_int(3),
    ];
    (1usize..=3, prop::collection::vec(0usize..menu.len(), 3)).prop_map(move |(m, picks)| {
        let mut ranks: Vec<BigRational> = picks[..m].iter().map(|&i| menu[i].clone()).collect();
        ranks.sort();
        let specs = ranks
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                EpsSpec::with_rank(
                    i + 1,
                    PowerLogMonomial::eps_style(r.clone(), vec![]).unwrap(),
                    r,
                )
                .unwrap()
            })
            .collect();
        EpsSet::new(specs).unwrap()
    })
}

/// Exhaustive independent count of exponent tables with the given rank.
/// Each slot's exponent is capped by what its weight alone allows, so the
/// search box stays exact but small.
fn brute_force_monomials(eps: &EpsSet, rho: &BigRational) -> usize {
    let rho_f = rho.to_f64().unwrap();
    let max_r = rho_f.floor() as usize;
    let mut slots: Vec<(BigRational, u32)> = Vec::new();
    for spec in eps.specs() {
        for r in 0..=max_r {
            let weight = &spec.rank + BigRational::from_integer((r as i64).into());
            if weight > *rho {
                continue;
            }
            let cap = (rho / &weight).floor().to_integer().to_u32().unwrap();
            slots.push((weight, cap));
        }
    }
    let mut count = 0;
    let mut table = vec![0u32; slots.len()];
    'outer: loop {
        let mut rank = BigRational::from_integer(0.into());
        let mut total = 0u32;
        for ((w, _), &beta) in slots.iter().zip(&table) {
            if beta > 0 {
                rank += w * BigRational::from_integer((beta as i64).into());
                total += beta;
            }
        }
        if total > 0 && rank == *rho {
            count += 1;
        }
        let mut pos = 0;
        loop {
            if pos == table.len() {
                break 'outer;
            }
            table[pos] += 1;
            if table[pos] <= slots[pos].1 {
                break;
            }
            table[pos] = 0;
            pos += 1;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monomial_sets_round_trip(eps in arb_eps_set()) {
        // Every enumerated rank reproduces monomials of exactly that rank,
        // with the cardinality an independent brute force confirms.
        let bound = rational_int(3);
        for rho in enumerate_ranks(&eps, &bound) {
            let monos = monomials_of_rank(&eps, &rho);
            prop_assert!(!monos.is_empty());
            for m in &monos {
                prop_assert_eq!(m.rank(), &rho);
            }
            prop_assert_eq!(monos.len(), brute_force_monomials(&eps, &rho));
        }
    }

    #[test]
    fn ranks_of_listed_monomials_are_achievable(eps in arb_eps_set()) {
        // Conversely, a rank with no monomials never shows up in the list.
        let bound = rational_int(3);
        let ranks = enumerate_ranks(&eps, &bound);
        for w in ranks.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        // Probe a rank strictly between two consecutive achievable ones.
        if ranks.len() >= 2 {
            let mid = (&ranks[0] + &ranks[1]) / BigRational::from_integer(2.into());
            if !ranks.contains(&mid) {
                prop_assert!(monomials_of_rank(&eps, &mid).is_empty());
            }
        }
    }
}

#[test]
fn monomial_growth_stays_bounded() {
    // |ν_sp(t)| / ε₁(t)^{ρ_s/ϱ₁} over t ∈ [1e3, 1e6] for all monomials with
    // rank ≤ 4 of the (1/t, 1/(t ln t)) family.
    let eps = EpsSet::new(vec![
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
    .unwrap();
    let bound = rational_int(4);
    for rho in enumerate_ranks(&eps, &bound) {
        let q = rho.to_f64().unwrap();
        for m in monomials_of_rank(&eps, &rho) {
            for i in 0..25 {
                let t = 1e3 * (1e3f64).powf(i as f64 / 24.0);
                let v = m.evaluate(&eps, t).unwrap().abs();
                let ratio = v * t.powf(q);
                assert!(
                    ratio <= 32.0,
                    "monomial {m} at t={t}: ratio {ratio}"
                );
            }
        }
    }
}

#[test]
fn monomial_multiplication_table_addition() {
    let eps = EpsSet::new(vec![
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
    .unwrap();
    // (ε₁ε₂)·ε₁' has the summed exponent table and rank 4.
    let a = NuMonomial::new(&eps, BTreeMap::from([((1, 0), 1), ((2, 0), 1)])).unwrap();
    let b = NuMonomial::new(&eps, BTreeMap::from([((1, 1), 1)])).unwrap();
    let prod = a.multiply(&b);
    assert_eq!(prod.rank(), &rational_int(4));
    assert_eq!(
        prod.exponents(),
        &BTreeMap::from([((1, 0), 1), ((1, 1), 1), ((2, 0), 1)])
    );
}
