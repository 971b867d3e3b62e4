//! Shared fixtures: the three worked examples (periodic, decaying
//! exponential, almost periodic), each n = m = 2 with A = diag(-1, -2) and
//! eps = (1/t, 1/(t ln t)) unless stated otherwise.

use std::collections::BTreeMap;

use oscex_core::consts::DELTA_MIN;
use oscex_core::expansion::{MultiIndex, PolyNonlinearity, Problem};
use oscex_core::osc::{Basis, FreqVector, Generator, GeneratorBasis, OscFn, OscVector};
use oscex_core::powerlog::{rational_int, PowerLogMonomial};
use oscex_core::ranks::{EpsSet, EpsSpec};

pub fn eps_inverse_t_pair() -> EpsSet {
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

pub fn k(coeffs: &[i64]) -> FreqVector {
    FreqVector::new(coeffs.to_vec())
}

fn unit_coeff_vec(basis: &Basis<f64>, component: usize) -> OscVector<f64> {
    let one = OscFn::constant(basis, 1.0);
    let zero = OscFn::zero(basis);
    if component == 0 {
        OscVector::new(vec![one, zero]).unwrap()
    } else {
        OscVector::new(vec![zero, one]).unwrap()
    }
}

fn scaled_coeff_vec(basis: &Basis<f64>, component: usize, f: OscFn<f64>) -> OscVector<f64> {
    let zero = OscFn::zero(basis);
    if component == 0 {
        OscVector::new(vec![f, zero]).unwrap()
    } else {
        OscVector::new(vec![zero, f]).unwrap()
    }
}

/// Periodic-class fixture, matching the first worked example's shape:
/// f = (sin t, cos 2t), f₁ = (y₁ + y₂²·cos 3t, y₂),
/// f₂ = (y₂, y₁ + y₁y₂·sin 2t). One oscillation generator, integer lattice.
pub fn example1() -> Problem<f64> {
    let basis = GeneratorBasis::new(vec![Generator::Oscillation(1.0)]).unwrap();
    let a = vec![vec![-1.0, 0.0], vec![0.0, -2.0]];
    let f = OscVector::new(vec![
        OscFn::sin(&basis, k(&[1])).unwrap(),
        OscFn::cos(&basis, k(&[2])).unwrap(),
    ])
    .unwrap();
    let g1 = OscFn::cos(&basis, k(&[3])).unwrap();
    let g2 = OscFn::sin(&basis, k(&[2])).unwrap();

    let nl1 = PolyNonlinearity::new(
        2,
        BTreeMap::from([
            (MultiIndex::new(vec![1, 0]), unit_coeff_vec(&basis, 0)),
            (MultiIndex::new(vec![0, 1]), unit_coeff_vec(&basis, 1)),
            (MultiIndex::new(vec![0, 2]), scaled_coeff_vec(&basis, 0, g1)),
        ]),
    )
    .unwrap();
    let nl2 = PolyNonlinearity::new(
        2,
        BTreeMap::from([
            (MultiIndex::new(vec![0, 1]), unit_coeff_vec(&basis, 0)),
            (MultiIndex::new(vec![1, 0]), unit_coeff_vec(&basis, 1)),
            (MultiIndex::new(vec![1, 1]), scaled_coeff_vec(&basis, 1, g2)),
        ]),
    )
    .unwrap();

    Problem::new(
        a,
        f,
        eps_inverse_t_pair(),
        vec![nl1, nl2],
        100.0,
        20.0,
        DELTA_MIN,
    )
    .unwrap()
}

/// Same shape with a caller-chosen matrix (used for parameter counts).
pub fn example1_with_matrix(a: Vec<Vec<f64>>) -> Problem<f64> {
    let p = example1();
    Problem::new(
        a,
        p.forcing.clone(),
        p.eps.clone(),
        p.nonlinearities.clone(),
        p.t0,
        p.radius,
        p.delta_min,
    )
    .unwrap()
}

/// Constant vectors of the decaying-exponential fixture.
pub const M0: [f64; 2] = [1.0, -0.5];
pub const M1: [f64; 2] = [0.25, 1.0];
pub const M2: [f64; 2] = [-0.75, 0.5];

/// Decaying-exponential-class fixture:
/// f = m₀ + (e^{-πt}, e^{-√2 t}), f₁ = m₁ + (y₁ + y₂²e^{-πt}, y₂),
/// f₂ = m₂ + (y₁, y₂ + y₁y₂e^{-√2 t}).
///
/// The decay rates {-π, -√2} generate a lattice that keeps its distance from
/// the spectrum {-1, -2}, so every solve stays resonance-free.
pub fn example2() -> Problem<f64> {
    let basis = GeneratorBasis::new(vec![
        Generator::Decay(-std::f64::consts::PI),
        Generator::Decay(-2.0f64.sqrt()),
    ])
    .unwrap();
    let a = vec![vec![-1.0, 0.0], vec![0.0, -2.0]];
    let e_pi = OscFn::exp_term(&basis, k(&[1, 0]), 1.0.into()).unwrap();
    let e_sqrt2 = OscFn::exp_term(&basis, k(&[0, 1]), 1.0.into()).unwrap();

    let f = OscVector::new(vec![
        OscFn::constant(&basis, M0[0]).add(&e_pi).unwrap(),
        OscFn::constant(&basis, M0[1]).add(&e_sqrt2).unwrap(),
    ])
    .unwrap();

    let const_vec = |m: [f64; 2]| {
        OscVector::new(vec![
            OscFn::constant(&basis, m[0]),
            OscFn::constant(&basis, m[1]),
        ])
        .unwrap()
    };

    let nl1 = PolyNonlinearity::new(
        2,
        BTreeMap::from([
            (MultiIndex::new(vec![0, 0]), const_vec(M1)),
            (MultiIndex::new(vec![1, 0]), unit_coeff_vec(&basis, 0)),
            (MultiIndex::new(vec![0, 1]), unit_coeff_vec(&basis, 1)),
            (
                MultiIndex::new(vec![0, 2]),
                scaled_coeff_vec(&basis, 0, e_pi.clone()),
            ),
        ]),
    )
    .unwrap();
    let nl2 = PolyNonlinearity::new(
        2,
        BTreeMap::from([
            (MultiIndex::new(vec![0, 0]), const_vec(M2)),
            (MultiIndex::new(vec![1, 0]), unit_coeff_vec(&basis, 0)),
            (MultiIndex::new(vec![0, 1]), unit_coeff_vec(&basis, 1)),
            (
                MultiIndex::new(vec![1, 1]),
                scaled_coeff_vec(&basis, 1, e_sqrt2.clone()),
            ),
        ]),
    )
    .unwrap();

    Problem::new(
        a,
        f,
        eps_inverse_t_pair(),
        vec![nl1, nl2],
        100.0,
        20.0,
        DELTA_MIN,
    )
    .unwrap()
}

/// Almost-periodic-class fixture with linear damping coefficients:
/// f = (sin t, cos e t), f₁ = (γ̃₁y₁ + y₂²cos πt, γ̃₁y₂),
/// f₂ = (γ̃₂y₁, γ̃₂y₂ + y₁y₂ sin √2 t). Generators {1, √2, e, π}.
pub fn example3(gamma1: f64, gamma2: f64) -> Problem<f64> {
    let basis = GeneratorBasis::new(vec![
        Generator::Oscillation(1.0),
        Generator::Oscillation(2.0f64.sqrt()),
        Generator::Oscillation(std::f64::consts::E),
        Generator::Oscillation(std::f64::consts::PI),
    ])
    .unwrap();
    let a = vec![vec![-1.0, 0.0], vec![0.0, -2.0]];
    let f = OscVector::new(vec![
        OscFn::sin(&basis, k(&[1, 0, 0, 0])).unwrap(),
        OscFn::cos(&basis, k(&[0, 0, 1, 0])).unwrap(),
    ])
    .unwrap();
    let cos_pi = OscFn::cos(&basis, k(&[0, 0, 0, 1])).unwrap();
    let sin_sqrt2 = OscFn::sin(&basis, k(&[0, 1, 0, 0])).unwrap();
    let g1c = OscFn::constant(&basis, gamma1);
    let g2c = OscFn::constant(&basis, gamma2);
    let zero = OscFn::zero(&basis);

    let nl1 = PolyNonlinearity::new(
        2,
        BTreeMap::from([
            (
                MultiIndex::new(vec![1, 0]),
                OscVector::new(vec![g1c.clone(), zero.clone()]).unwrap(),
            ),
            (
                MultiIndex::new(vec![0, 1]),
                OscVector::new(vec![zero.clone(), g1c.clone()]).unwrap(),
            ),
            (
                MultiIndex::new(vec![0, 2]),
                OscVector::new(vec![cos_pi, zero.clone()]).unwrap(),
            ),
        ]),
    )
    .unwrap();
    let nl2 = PolyNonlinearity::new(
        2,
        BTreeMap::from([
            (
                MultiIndex::new(vec![1, 0]),
                OscVector::new(vec![g2c.clone(), zero.clone()]).unwrap(),
            ),
            (
                MultiIndex::new(vec![0, 1]),
                OscVector::new(vec![zero.clone(), g2c.clone()]).unwrap(),
            ),
            (
                MultiIndex::new(vec![1, 1]),
                OscVector::new(vec![zero.clone(), sin_sqrt2]).unwrap(),
            ),
        ]),
    )
    .unwrap();

    Problem::new(
        a,
        f,
        eps_inverse_t_pair(),
        vec![nl1, nl2],
        100.0,
        20.0,
        DELTA_MIN,
    )
    .unwrap()
}

/// A problem with zero forcing and zero nonlinearities on the given basis.
pub fn trivial_problem() -> Problem<f64> {
    let basis = GeneratorBasis::new(vec![Generator::Oscillation(1.0)]).unwrap();
    Problem::new(
        vec![vec![-1.0, 0.0], vec![0.0, -2.0]],
        OscVector::zero(&basis, 2),
        eps_inverse_t_pair(),
        vec![PolyNonlinearity::zero(2), PolyNonlinearity::zero(2)],
        100.0,
        20.0,
        DELTA_MIN,
    )
    .unwrap()
}
