#![allow(dead_code)]

use num_complex::Complex64;
use potential_lab::fields::{self, EntireSpec, Monomial, ScalarField};
use potential_lab::geometry::Dim;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn d(m: usize) -> Dim {
    Dim::new(m).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng, m: usize, radius: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-radius..radius)).collect();
        if x.iter().map(|c| c * c).sum::<f64>().sqrt() <= radius {
            return x;
        }
    }
}

pub fn random_vec(rng: &mut ChaCha8Rng, m: usize, amp: f64) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-amp..amp)).collect()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Subharmonic catalog members defined on all of `R^m`.
pub fn random_subharmonic(rng: &mut ChaCha8Rng, m: usize) -> ScalarField {
    let dim = d(m);
    let pick = rng.random_range(0..8);
    match (m, pick) {
        (_, 0) => fields::constant(dim, rng.random_range(-3.0..3.0)).unwrap(),
        (_, 1) => fields::affine(random_vec(rng, m, 2.0), rng.random_range(-1.0..1.0)).unwrap(),
        (_, 2) => fields::radial_power(random_vec(rng, m, 0.5), rng.random_range(1.0..4.0)).unwrap(),
        (_, 3) => fields::sum_abs(dim),
        (_, 4) => fields::exp_linear(random_vec(rng, m, 0.7)).unwrap(),
        (_, 5) => {
            let pieces = (0..3)
                .map(|_| (random_vec(rng, m, 1.5), rng.random_range(-1.0..1.0)))
                .collect();
            fields::max_affine(pieces).unwrap()
        }
        (2, 6) => {
            let coeffs = (0..3)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            fields::make_log_modulus(EntireSpec::Polynomial(coeffs)).unwrap()
        }
        (2, 7) => fields::log_distance([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).unwrap(),
        (m, 6 | 7) if m >= 3 => fields::newton_kernel(random_vec(rng, m, 0.6), rng.random_range(0.1..2.0)).unwrap(),
        _ => fields::radial_power(vec![0.0; m], 2.0).unwrap(),
    }
}

/// Harmonic catalog members with a centre `x` and radius `r` such that the
/// closed ball lies where the field is harmonic.
pub fn harmonic_cases() -> Vec<(ScalarField, Vec<f64>, f64)> {
    let m2 = d(2);
    let m3 = d(3);
    let mono = |c: f64, e: &[u32]| Monomial::new(c, e.to_vec());
    vec![
        (fields::affine(vec![1.0, 0.0], 0.0).unwrap(), vec![0.3, -0.2], 1.5),
        (fields::affine(vec![-2.0, 3.5], 1.0).unwrap(), vec![0.0, 0.0], 4.0),
        (fields::affine(vec![0.5, 0.5], -7.0).unwrap(), vec![-1.0, 2.0], 0.25),
        (
            fields::make_harmonic_poly(m2, vec![mono(1.0, &[2, 0]), mono(-1.0, &[0, 2])]).unwrap(),
            vec![0.5, 0.5],
            1.0,
        ),
        (
            fields::make_harmonic_poly(m2, vec![mono(1.0, &[1, 1])]).unwrap(),
            vec![1.0, -1.0],
            2.0,
        ),
        (
            fields::make_harmonic_poly(m2, vec![mono(1.0, &[3, 0]), mono(-3.0, &[1, 2])]).unwrap(),
            vec![0.2, 0.1],
            1.3,
        ),
        (
            fields::make_harmonic_poly(m2, vec![mono(1.0, &[4, 0]), mono(-6.0, &[2, 2]), mono(1.0, &[0, 4])]).unwrap(),
            vec![-0.4, 0.3],
            0.9,
        ),
        (fields::log_distance([3.0, 0.0]).unwrap(), vec![0.0, 0.0], 2.0),
        (
            fields::make_log_modulus(EntireSpec::Polynomial(vec![c(5.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)])).unwrap(),
            vec![0.1, 0.0],
            1.0,
        ),
        (fields::poisson_kernel(vec![2.0, 1.0]).unwrap(), vec![0.0, 0.0], 1.5),
        (
            fields::affine(vec![1.0, -1.0, 2.0], 0.5).unwrap(),
            vec![0.0, 0.0, 0.0],
            3.0,
        ),
        (
            fields::make_harmonic_poly(m3, vec![mono(1.0, &[2, 0, 0]), mono(-1.0, &[0, 2, 0])]).unwrap(),
            vec![0.1, 0.2, 0.3],
            1.0,
        ),
        (
            fields::make_harmonic_poly(m3, vec![mono(1.0, &[2, 0, 0]), mono(-1.0, &[0, 0, 2])]).unwrap(),
            vec![0.0, 0.0, 0.0],
            2.0,
        ),
        (
            fields::make_harmonic_poly(m3, vec![mono(1.0, &[1, 1, 1])]).unwrap(),
            vec![0.5, -0.5, 0.25],
            1.2,
        ),
        (
            fields::make_harmonic_poly(
                m3,
                vec![mono(1.0, &[2, 0, 0]), mono(1.0, &[0, 2, 0]), mono(-2.0, &[0, 0, 2])],
            )
            .unwrap(),
            vec![0.3, 0.0, -0.3],
            0.8,
        ),
        (
            fields::make_harmonic_poly(m3, vec![mono(1.0, &[3, 0, 0]), mono(-3.0, &[1, 2, 0])]).unwrap(),
            vec![0.0, 0.1, 0.0],
            1.1,
        ),
        (
            fields::newton_kernel(vec![3.0, 0.0, 0.0], 1.0).unwrap(),
            vec![0.0, 0.0, 0.0],
            1.5,
        ),
        (
            fields::newton_kernel(vec![0.0, -2.0, 1.0], 0.5).unwrap(),
            vec![0.2, 0.2, 0.2],
            1.0,
        ),
        (
            fields::poisson_kernel(vec![0.0, 0.0, 2.5]).unwrap(),
            vec![0.0, 0.0, 0.0],
            1.0,
        ),
        (
            fields::make_harmonic_poly(m3, vec![mono(2.0, &[1, 0, 1]), mono(-1.0, &[0, 1, 0])]).unwrap(),
            vec![1.0, 1.0, 1.0],
            0.5,
        ),
    ]
}
