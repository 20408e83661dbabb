#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use proptest::prelude::*;

use ncgeom::metric::NcMetric;
use ncgeom::rational::{frac, Rational};
use ncgeom::random::{self, SeededRng};
use ncgeom::scalar::{BasePoint, Scalar};
use ncgeom::series::HbarSeries;
use ncgeom::star::{mu_literal, StarProduct, ThetaMatrix};
use ncgeom::tensor::Tensor;

fn base(rng: &mut SeededRng, n: usize) -> Arc<BasePoint> {
    Arc::new(random::rational_point(rng, n))
}

fn jet(rng: &mut SeededRng, b: &Arc<BasePoint>, order: usize) -> Scalar {
    Scalar::Jet(random::jet(rng, b, order))
}

fn same(a: &Scalar, b: &Scalar) -> bool {
    a.agrees_with(b).unwrap()
}

fn theta(rng: &mut SeededRng, n: usize) -> ThetaMatrix {
    let mut m = vec![vec![Rational::from_integer(0.into()); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = random::small_rational(rng);
            m[j][i] = -v.clone();
            m[i][j] = v;
        }
    }
    ThetaMatrix::new(m).unwrap()
}

fn rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=5).prop_map(|(p, q)| frac(p, q))
}

fn constant_series(n: usize) -> impl Strategy<Value = HbarSeries> {
    proptest::collection::vec(rational(), n + 1).prop_map(move |c| HbarSeries::from_rationals(n, &c))
}

/// `g_{ij}[q] = (−1)^q g_{ji}[q]`, with `g[0]` invertible at the base point.
fn parity_metric(rng: &mut SeededRng, b: &Arc<BasePoint>, star: StarProduct, n: usize, order: usize) -> NcMetric {
    let dim = star.dim();
    loop {
        let mut g = Tensor::zeros(dim, 2, n);
        for i in 0..dim {
            for j in i..dim {
                let coeffs: Vec<Scalar> = (0..=n).map(|_| jet(rng, b, order)).collect();
                let mirrored = HbarSeries::from_coeffs(n, coeffs.iter().cloned());
                g.set(&[i, j], mirrored.clone());
                if i != j {
                    g.set(&[j, i], mirrored.parity_flip());
                } else {
                    let (even, _) = mirrored.parity_split();
                    g.set(&[i, i], even);
                }
            }
        }
        let metric = NcMetric::new(g, star.clone()).unwrap();
        if metric.check_invertible() {
            return metric;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jet_ring_axioms(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 1 + (seed % 3) as usize;
        let b = base(&mut rng, n);
        let (x, y, z) = (jet(&mut rng, &b, 4), jet(&mut rng, &b, 4), jet(&mut rng, &b, 3));
        prop_assert!(same(&x.mul(&y).unwrap().mul(&z).unwrap(), &x.mul(&y.mul(&z).unwrap()).unwrap()));
        prop_assert!(same(
            &x.mul(&y.add(&z).unwrap()).unwrap(),
            &x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap()
        ));
        prop_assert!(same(&x.mul(&y).unwrap(), &y.mul(&x).unwrap()));
        prop_assert!(same(&x.add(&y).unwrap(), &y.add(&x).unwrap()));
        prop_assert!(x.sub(&x).unwrap().is_zero());
        prop_assert!(same(&x.mul(&Scalar::one()).unwrap(), &x));
        // Mixed budgets meet at the smaller order.
        prop_assert_eq!(x.mul(&z).unwrap().order(), Some(3));
    }

    #[test]
    fn leibniz_and_commuting_partials(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 2 + (seed % 2) as usize;
        let b = base(&mut rng, n);
        let (x, y) = (jet(&mut rng, &b, 5), jet(&mut rng, &b, 5));
        for i in 0..n {
            let lhs = x.mul(&y).unwrap().partial(i).unwrap();
            let rhs = x.partial(i).unwrap().mul(&y).unwrap()
                .add(&x.mul(&y.partial(i).unwrap()).unwrap()).unwrap();
            prop_assert!(same(&lhs, &rhs));
            for j in 0..n {
                let ij = x.partial(i).unwrap().partial(j).unwrap();
                let ji = x.partial(j).unwrap().partial(i).unwrap();
                prop_assert_eq!(ij, ji);
            }
        }
    }

    #[test]
    fn zero_test_is_exact(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let b = base(&mut rng, 2);
        let x = jet(&mut rng, &b, 3);
        let tiny = Scalar::constant(frac(1, 1_000_000_007));
        prop_assert!(x.sub(&x).unwrap().is_zero());
        prop_assert!(!x.add(&tiny).unwrap().sub(&x).unwrap().is_zero());
    }

    #[test]
    fn series_module_axioms(
        a in constant_series(4),
        b in constant_series(4),
        r in rational(),
        s in rational(),
    ) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(a.add(&b).unwrap().scale(&r), a.scale(&r).add(&b.scale(&r)).unwrap());
        prop_assert_eq!(a.scale(&(r.clone() + &s)).values(), a.scale(&r).add(&a.scale(&s)).unwrap().values());
        prop_assert_eq!(a.scale(&r).scale(&s).values(), a.scale(&(r * s)).values());
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn parity_split_is_a_projection_pair(a in constant_series(5)) {
        let (even, odd) = a.parity_split();
        prop_assert_eq!(even.add(&odd).unwrap(), a.clone());
        prop_assert_eq!(even.parity_split().0, even.clone());
        prop_assert!(odd.parity_split().0.is_zero());
        prop_assert!(even.parity_split().1.is_zero());
        prop_assert_eq!(a.parity_flip().parity_flip(), a.clone());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn moyal_parity_and_literal_form(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 2 + (seed % 2) as usize;
        let b = base(&mut rng, n);
        let t = theta(&mut rng, n);
        let (u, v) = (jet(&mut rng, &b, 6), jet(&mut rng, &b, 6));
        let max_q = if n == 2 { 3 } else { 2 };
        for q in 0..=max_q {
            let op = t.moyal_operator(q);
            let uv = if q == 0 { u.mul(&v).unwrap() } else { op.apply(&u, &v).unwrap() };
            let vu = if q == 0 { v.mul(&u).unwrap() } else { op.apply(&v, &u).unwrap() };
            let signed = if q % 2 == 0 { vu } else { vu.neg() };
            prop_assert!(same(&uv, &signed), "q = {}", q);
            prop_assert!(same(&uv, &mu_literal(&t, q, &u, &v).unwrap()), "q = {}", q);
        }
    }

    #[test]
    fn moyal_unital_bilinear_associative(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let order = 3;
        let b = base(&mut rng, 2);
        let star = StarProduct::moyal(theta(&mut rng, 2));
        let [x, y, z] = [0, 1, 2].map(|_| random::series(&mut rng, &b, order, 3 * order + 1));
        let one = HbarSeries::one(order);
        prop_assert!(star.mul(&one, &x).unwrap().agrees_with(&x).unwrap());
        prop_assert!(star.mul(&x, &one).unwrap().agrees_with(&x).unwrap());
        let r = random::small_rational(&mut rng);
        prop_assert!(star.mul(&x.scale(&r), &y.add(&z).unwrap()).unwrap().agrees_with(
            &star.mul(&x, &y).unwrap().add(&star.mul(&x, &z).unwrap()).unwrap().scale(&r)
        ).unwrap());
        let left = star.mul(&star.mul(&x, &y).unwrap(), &z).unwrap();
        let right = star.mul(&x, &star.mul(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(left.first_difference(&right).unwrap(), None);
    }

    /// `(g^{ij}⋆f⋆g^{kl})[q] = (−1)^q (g^{lk}⋆f⋆g^{ji})[q]` for a parity metric.
    #[test]
    fn inverse_sandwich_parity(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (n, order) = (3, 12);
        let b = base(&mut rng, 2);
        let star = StarProduct::moyal(theta(&mut rng, 2));
        let g = parity_metric(&mut rng, &b, star.clone(), n, order);
        let inv = g.star_inverse().unwrap();
        let f = HbarSeries::constant(n, jet(&mut rng, &b, order));
        let idx = |rng: &mut SeededRng| [0, 1, 2, 3].map(|_| rand::Rng::gen_range(rng, 0..2));
        for _ in 0..3 {
            let [i, j, k, l] = idx(&mut rng);
            let lhs = star.mul_chain(&[inv.get(i, j), &f, inv.get(k, l)]).unwrap();
            let rhs = star.mul_chain(&[inv.get(l, k), &f, inv.get(j, i)]).unwrap();
            prop_assert_eq!(lhs.first_difference(&rhs.parity_flip()).unwrap(), None, "{:?}", (i, j, k, l));
        }
    }

    /// `(u⋆g^{ij}⋆v)[q] = (−1)^q (v⋆g^{ji}⋆u)[q]` for ħ-independent `u`, `v`.
    #[test]
    fn outer_sandwich_parity(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (n, order) = (3, 12);
        let b = base(&mut rng, 2);
        let star = StarProduct::moyal(theta(&mut rng, 2));
        let g = parity_metric(&mut rng, &b, star.clone(), n, order);
        let inv = g.star_inverse().unwrap();
        let u = HbarSeries::constant(n, jet(&mut rng, &b, order));
        let v = HbarSeries::constant(n, jet(&mut rng, &b, order));
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let lhs = star.mul_chain(&[&u, inv.get(i, j), &v]).unwrap();
            let rhs = star.mul_chain(&[&v, inv.get(j, i), &u]).unwrap();
            prop_assert_eq!(lhs.first_difference(&rhs.parity_flip()).unwrap(), None);
        }
    }
}

#[test]
fn sandwich_parity_needs_the_hypothesis() {
    let mut rng = random::rng(11);
    let b = base(&mut rng, 2);
    let star = StarProduct::moyal(ThetaMatrix::single(2, 0, 1, frac(1, 1)).unwrap());
    let g = parity_metric(&mut rng, &b, star.clone(), 3, 12);
    // An odd-order symmetric perturbation breaks the parity of the metric.
    let mut t = g.tensor().clone();
    let bump = HbarSeries::monomial(3, 1, jet(&mut rng, &b, 12));
    t.set(&[0, 1], t.get(&[0, 1]).add(&bump).unwrap());
    t.set(&[1, 0], t.get(&[1, 0]).add(&bump).unwrap());
    let broken = NcMetric::new(t, star.clone()).unwrap();
    let inv = broken.star_inverse().unwrap();
    let f = HbarSeries::constant(3, jet(&mut rng, &b, 12));
    let lhs = star.mul_chain(&[inv.get(0, 1), &f, inv.get(0, 0)]).unwrap();
    let rhs = star.mul_chain(&[inv.get(0, 0), &f, inv.get(1, 0)]).unwrap();
    assert!(lhs.first_difference(&rhs.parity_flip()).unwrap().is_some());
}
