use ncgeom::connection::{
    canonical_connection, check_chiral_parity, check_chirality_and_torsion, check_compatibility, Chiral,
};
use ncgeom::curvature::{
    check_right_curvature, contracted_bianchi_check, curvature_covariant_derivative, first_bianchi_check,
    ricci_bundle, ricci_equivalence_check, riemann, right_riemann, second_bianchi_check,
};
use ncgeom::metric::{check_metric_parity, NcMetric};
use ncgeom::rational::{frac, int, Rational};
use ncgeom::series::HbarSeries;
use ncgeom::star::{StarProduct, ThetaMatrix};
use ncgeom::tensor::Tensor;

const N: usize = 6;

/// Truncated product of integer/rational polynomials in ħ.
fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![int(0); N + 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j <= N {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn ints(v: &[i64]) -> Vec<Rational> {
    let mut out: Vec<Rational> = v.iter().map(|&c| int(c)).collect();
    out.resize(N + 1, int(0));
    out
}

fn neg(v: &[Rational]) -> Vec<Rational> {
    v.iter().map(|c| -c.clone()).collect()
}

fn series(v: &[Rational]) -> HbarSeries {
    HbarSeries::from_rationals(N, v)
}

fn chiral(u222: HbarSeries) -> Chiral {
    let h = HbarSeries::from_ints(N, &[0, 1]);
    let m = h.neg();
    let mut t = Tensor::zeros(2, 3, N);
    for (idx, v) in [
        ([0, 0, 0], h.clone()),
        ([0, 1, 0], m.clone()),
        ([1, 0, 0], m.clone()),
        ([1, 1, 0], m.clone()),
        ([0, 0, 1], m.clone()),
        ([0, 1, 1], m.clone()),
        ([1, 0, 1], m.clone()),
        ([1, 1, 1], u222),
    ] {
        t.set(&idx, v);
    }
    Chiral::new(t).unwrap()
}

fn diag(entry: HbarSeries) -> NcMetric {
    let mut t = Tensor::zeros(2, 2, N);
    t.set(&[0, 0], entry.clone());
    t.set(&[1, 1], entry);
    NcMetric::new(t, StarProduct::moyal(ThetaMatrix::single(2, 0, 1, int(1)).unwrap())).unwrap()
}

/// Displayed data of one example, expanded to order `N`.
struct Display {
    inverse_diag: Vec<Rational>,
    /// `Γ_{ijk}` for all eight index triples (0-based), `Γ̃ = −Γ`.
    gamma: Vec<([usize; 3], Vec<Rational>)>,
    r1212: Vec<Rational>,
    ricci: Vec<Rational>,
    ricci_up: Vec<Rational>,
}

fn check_example(g: NcMetric, u: Chiral, want: Display) {
    let inv = g.star_inverse().unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let expected = if i == j { want.inverse_diag.clone() } else { ints(&[0]) };
            assert_eq!(inv.get(i, j), &series(&expected), "g^{i}{j}");
        }
    }
    let conn = canonical_connection(&g, &inv, &u).unwrap();
    assert_eq!(want.gamma.len(), 8);
    for (idx, v) in &want.gamma {
        assert_eq!(conn.lower.get(idx), &series(v), "Γ{idx:?}");
        assert_eq!(conn.lower_right.get(idx), &series(&neg(v)), "Γ̃{idx:?}");
    }
    assert!(check_compatibility(&g, &conn).unwrap().passed);
    assert!(check_chirality_and_torsion(&conn, &u).unwrap().passed);

    let r = riemann(&g, &inv, &conn).unwrap();
    for (idx, sign) in [([0, 1, 0, 1], 1), ([0, 1, 1, 0], -1), ([1, 0, 0, 1], -1), ([1, 0, 1, 0], 1)] {
        let expected = if sign > 0 { want.r1212.clone() } else { neg(&want.r1212) };
        assert_eq!(r.lower.get(&idx), &series(&expected), "R{idx:?}");
    }
    // The other twelve components vanish.
    let nonzero = r.lower.entries().filter(|(_, s)| !s.is_zero()).count();
    assert_eq!(nonzero, 4);
    let right = right_riemann(&g, &conn).unwrap();
    assert!(check_right_curvature(&r, &right).unwrap().passed);

    let b = ricci_bundle(&g, &inv, &r).unwrap();
    for i in 0..2 {
        for t in [&b.ricci, &b.theta] {
            assert_eq!(t.get(&[i, i]), &series(&want.ricci));
            assert!(t.get(&[i, 1 - i]).is_zero());
        }
        for t in [&b.ricci_up, &b.theta_up] {
            assert_eq!(t.get(&[i, i]), &series(&want.ricci_up));
        }
    }

    assert!(first_bianchi_check(&r.operator).unwrap().passed);
    let d = curvature_covariant_derivative(&g, &inv, &conn, &r).unwrap();
    assert!(second_bianchi_check(&d).unwrap().passed);
    assert!(contracted_bianchi_check(&d).unwrap().passed);

    // The two Ricci curvatures are not related as under the parity hypotheses.
    let eq = ricci_equivalence_check(&g, &u, &conn, &r, &b).unwrap();
    assert!(!eq.hypotheses.passed);
    assert!(!eq.ricci_equivalence.passed);
}

fn gamma_table(g222: Vec<Rational>) -> Vec<([usize; 3], Vec<Rational>)> {
    let half = |c: i64| {
        let mut v = vec![int(0), frac(c, 2)];
        v.resize(N + 1, int(0));
        v
    };
    vec![
        ([0, 0, 0], half(1)),
        ([0, 1, 0], half(-1)),
        ([1, 0, 0], half(-1)),
        ([1, 1, 0], half(-1)),
        ([0, 0, 1], half(-1)),
        ([0, 1, 1], half(-1)),
        ([1, 0, 1], half(-1)),
        ([1, 1, 1], g222),
    ]
}

#[test]
fn example_one() {
    let g = diag(HbarSeries::from_ints(N, &[1; N + 1]));
    let u = chiral(HbarSeries::from_ints(N, &[0, 1]));
    assert!(!check_metric_parity(&g).unwrap().passed);
    assert!(check_chiral_parity(&u).unwrap().passed);

    // −ħ²(1−ħ)^k by repeated multiplication.
    let one_minus = ints(&[1, -1]);
    let r1212 = neg(&poly_mul(&ints(&[0, 0, 1]), &one_minus));
    let ricci = poly_mul(&r1212, &one_minus);
    let ricci_up = poly_mul(&ricci, &one_minus);
    assert_eq!(ricci_up, ints(&[0, 0, -1, 3, -3, 1]));
    let mut g222 = vec![int(0), frac(1, 2)];
    g222.resize(N + 1, int(0));
    check_example(
        g,
        u,
        Display { inverse_diag: one_minus, gamma: gamma_table(g222), r1212, ricci, ricci_up },
    );
}

#[test]
fn example_two() {
    let g = diag(HbarSeries::from_ints(N, &[1, 0, -1, 0, 1, 0, -1]));
    let u = chiral(HbarSeries::from_ints(N, &[0, 0, 1]));
    assert!(check_metric_parity(&g).unwrap().passed);
    assert!(!check_chiral_parity(&u).unwrap().passed);

    let mut factor = vec![int(0), int(0), frac(3, 4), frac(1, 4), frac(3, 4), frac(1, 4)];
    factor.resize(N + 1, int(0));
    let one_plus = ints(&[1, 0, 1]);
    let r1212 = neg(&factor);
    let ricci = poly_mul(&r1212, &one_plus);
    let ricci_up = poly_mul(&ricci, &one_plus);
    let mut g222 = vec![int(0), int(0), frac(1, 2)];
    g222.resize(N + 1, int(0));
    check_example(
        g,
        u,
        Display { inverse_diag: one_plus, gamma: gamma_table(g222), r1212, ricci, ricci_up },
    );
}
