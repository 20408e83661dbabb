//! Seeded generators for property checks.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::rational::{frac, Rational};
use crate::scalar::{BasePoint, Jet, Scalar};
use crate::series::HbarSeries;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small rational with denominator in 1..=3.
pub fn small_rational(rng: &mut impl Rng) -> Rational {
    frac(rng.gen_range(-4..=4), rng.gen_range(1..=3))
}

pub fn nonzero_rational(rng: &mut impl Rng) -> Rational {
    loop {
        let r = small_rational(rng);
        if r != Rational::from_integer(0.into()) {
            return r;
        }
    }
}

pub fn rational_point(rng: &mut impl Rng, n: usize) -> BasePoint {
    BasePoint::rational(&(0..n).map(|_| small_rational(rng)).collect::<Vec<_>>())
}

/// Dense random jet with small coefficients.
pub fn jet(rng: &mut impl Rng, base: &Arc<BasePoint>, order: usize) -> Jet {
    let zero = Jet::zero(base.clone(), order);
    let alphas: Vec<Vec<usize>> = zero.all_indices().collect();
    let mut terms = Vec::new();
    for a in alphas {
        if rng.gen_bool(0.7) {
            terms.push((a, small_rational(rng)));
        }
    }
    Jet::from_terms(base.clone(), order, terms).expect("indices from layout")
}

/// Series whose coefficients are random jets.
pub fn series(rng: &mut impl Rng, base: &Arc<BasePoint>, n: usize, order: usize) -> HbarSeries {
    HbarSeries::from_coeffs(n, (0..=n).map(|_| Scalar::Jet(jet(rng, base, order))))
}
