#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use ncgeom::connection::{
    check_chirality_and_torsion, check_compatibility, check_metric_parallel, Chiral,
};
use ncgeom::curvature::{
    check_right_curvature, contracted_bianchi_check, curvature_covariant_derivative,
    first_bianchi_check, ricci_bundle, ricci_equivalence_check, riemann, right_riemann,
    second_bianchi_check,
};
use ncgeom::embedding::{
    check_classical_limit, check_theta1_independence, classical_geometry, classical_metric,
    embedding_connection_and_chiral, fluctuation_metric, round_sphere, spherical_fluctuation,
    IsometricEmbedding, SphericalEmbeddingSpec,
};
use ncgeom::rational::{frac, int};
use ncgeom::scalar::{Anchor, BasePoint, Elementary, Jet, Scalar};
use ncgeom::star::{StarProduct, ThetaMatrix};

fn angle(s: i64, c: i64, d: i64) -> Anchor {
    Anchor::angle(frac(s, d), frac(c, d)).unwrap()
}

fn moyal2() -> StarProduct {
    StarProduct::moyal(ThetaMatrix::single(2, 0, 1, int(1)).unwrap())
}

/// Graph `(x, y, x²y + y³/3 − x)` over a rational point.
fn graph_surface(order: usize) -> IsometricEmbedding {
    let base = Arc::new(BasePoint::rational(&[frac(1, 2), frac(-1, 3)]));
    let x = Jet::coordinate(base.clone(), order, 0).unwrap();
    let y = Jet::coordinate(base, order, 1).unwrap();
    let h = x.mul(&x).unwrap().mul(&y).unwrap();
    let h = h
        .add(&y.mul(&y).unwrap().mul(&y).unwrap().scale(&frac(1, 3)))
        .unwrap()
        .sub(&x)
        .unwrap();
    IsometricEmbedding::euclidean(2, vec![Scalar::Jet(x), Scalar::Jet(y), Scalar::Jet(h)]).unwrap()
}

fn full_pipeline(x: &IsometricEmbedding, star: &StarProduct, n: usize) -> (Chiral, bool) {
    let g = fluctuation_metric(x, star, n).unwrap();
    let inv = g.star_inverse().unwrap();
    let (conn, chiral) = embedding_connection_and_chiral(x, &g, &inv).unwrap();
    assert!(check_compatibility(&g, &conn).unwrap().passed);
    assert!(check_chirality_and_torsion(&conn, &chiral).unwrap().passed);
    assert!(check_metric_parallel(&g, &inv, &conn).unwrap().passed);
    let riem = riemann(&g, &inv, &conn).unwrap();
    assert!(first_bianchi_check(&riem.operator).unwrap().passed);
    assert!(
        check_right_curvature(&riem, &right_riemann(&g, &conn).unwrap())
            .unwrap()
            .passed
    );
    let bundle = ricci_bundle(&g, &inv, &riem).unwrap();
    let eq = ricci_equivalence_check(&g, &chiral, &conn, &riem, &bundle).unwrap();
    let d = curvature_covariant_derivative(&g, &inv, &conn, &riem).unwrap();
    assert!(second_bianchi_check(&d).unwrap().passed);
    assert!(contracted_bianchi_check(&d).unwrap().passed);
    (chiral, eq.all_hold())
}

#[test]
fn identity_embedding_passes_everything() {
    let base = Arc::new(BasePoint::rational(&[int(1), int(2)]));
    let x = IsometricEmbedding::identity(base, 10).unwrap();
    let (chiral, eq) = full_pipeline(&x, &moyal2(), 5);
    assert!(chiral.tensor().is_zero());
    assert!(eq);
}

#[test]
fn round_sphere_quantum_fluctuation() {
    let base = Arc::new(BasePoint::new(vec![angle(3, 4, 5), angle(5, 12, 13)]));
    let x = round_sphere(base, 10).unwrap();
    let (chiral, eq) = full_pipeline(&x, &moyal2(), 5);
    assert!(!chiral.tensor().is_zero());
    assert!(eq);
}

#[test]
fn graph_surface_equivalence() {
    let (_, eq) = full_pipeline(&graph_surface(10), &moyal2(), 5);
    assert!(eq);
}

#[test]
fn round_sphere_classical_limit() {
    let base = Arc::new(BasePoint::new(vec![angle(3, 4, 5), angle(7, 24, 25)]));
    let x = round_sphere(base, 8).unwrap();
    let g = fluctuation_metric(&x, &moyal2(), 3).unwrap();
    let inv = g.star_inverse().unwrap();
    let (conn, _) = embedding_connection_and_chiral(&x, &g, &inv).unwrap();
    let riem = riemann(&g, &inv, &conn).unwrap();
    let classical = classical_geometry(&classical_metric(&x).unwrap()).unwrap();
    assert!(
        check_classical_limit(&conn, &riem.lower, &classical)
            .unwrap()
            .passed
    );
}

#[test]
fn classical_limit_detects_a_wrong_layer() {
    let base = Arc::new(BasePoint::new(vec![angle(3, 4, 5), angle(7, 24, 25)]));
    let x = round_sphere(base.clone(), 8).unwrap();
    let g = fluctuation_metric(&x, &moyal2(), 2).unwrap();
    let inv = g.star_inverse().unwrap();
    let (conn, _) = embedding_connection_and_chiral(&x, &g, &inv).unwrap();
    let riem = riemann(&g, &inv, &conn).unwrap();
    // Oracle built from a sphere of radius 2.
    let two = Scalar::int(2);
    let scaled: Vec<Scalar> = x
        .components()
        .iter()
        .map(|c| c.mul(&two).unwrap())
        .collect();
    let big = IsometricEmbedding::euclidean(2, scaled).unwrap();
    let classical = classical_geometry(&classical_metric(&big).unwrap()).unwrap();
    assert!(
        !check_classical_limit(&conn, &riem.lower, &classical)
            .unwrap()
            .passed
    );
}

#[test]
fn spherical_family_bianchi_and_independence() {
    let spec = SphericalEmbeddingSpec {
        n: 3,
        m: 4,
        p: 0,
        l: 3,
        lambda: int(1),
        profiles: vec![Elementary::Polynomial(vec![int(0), int(1)]); 4],
    };
    let base = Arc::new(BasePoint::new(vec![
        Anchor::value(int(2)),
        angle(3, 4, 5),
        angle(5, 12, 13),
    ]));
    let s = spherical_fluctuation(&spec, base, 3, 8).unwrap();
    let g = &s.metric;
    let inv = g.star_inverse().unwrap();
    let (conn, chiral) = embedding_connection_and_chiral(&s.embedding, g, &inv).unwrap();
    assert!(
        check_theta1_independence(&[
            ("g", g.tensor()),
            ("Γ", &conn.lower),
            ("Γ̃", &conn.lower_right)
        ])
        .unwrap()
        .passed
    );
    let riem = riemann(g, &inv, &conn).unwrap();
    assert!(first_bianchi_check(&riem.operator).unwrap().passed);
    let bundle = ricci_bundle(g, &inv, &riem).unwrap();
    assert!(ricci_equivalence_check(g, &chiral, &conn, &riem, &bundle)
        .unwrap()
        .all_hold());
    let d = curvature_covariant_derivative(g, &inv, &conn, &riem).unwrap();
    assert!(second_bianchi_check(&d).unwrap().passed);
    assert!(contracted_bianchi_check(&d).unwrap().passed);
}

#[test]
fn lorentzian_signature_profile() {
    // One timelike radial direction: X¹ = sinh-free polynomial, negative sign.
    let spec = SphericalEmbeddingSpec {
        n: 3,
        m: 4,
        p: 1,
        l: 3,
        lambda: frac(1, 2),
        profiles: vec![
            Elementary::Polynomial(vec![int(0), int(0), frac(1, 4)]),
            Elementary::Polynomial(vec![int(1), int(2)]),
            Elementary::Polynomial(vec![int(1), int(2)]),
            Elementary::Polynomial(vec![int(0), int(3)]),
        ],
    };
    let base = Arc::new(BasePoint::new(vec![
        Anchor::value(frac(1, 3)),
        angle(3, 4, 5),
        angle(8, 15, 17),
    ]));
    let s = spherical_fluctuation(&spec, base.clone(), 4, 6).unwrap();
    assert!(s.check_closed_form().unwrap().passed);
    assert!(s.check_symmetry_pattern().unwrap().passed);
    let classical = classical_metric(&s.embedding).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(s.metric.get(i, j).values()[0], *classical[i][j].value());
        }
    }
    // g₁₁[0] = −(f¹′)² + (f′)² sin²θ₂ + (f⁴′)² cos²θ₂ with f¹′ = ρ/2, f′ = 2, f⁴′ = 3.
    let expected = -frac(1, 36) + int(4) * frac(64, 289) + int(9) * frac(225, 289);
    assert_eq!(s.metric.get(0, 0).values()[0], expected);
}
