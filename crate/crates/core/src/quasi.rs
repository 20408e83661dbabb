//! Quasi-connections and curvatures of embeddings under a general star product.
//!
//! Nothing here relies on the Leibniz rule: covariant derivatives differentiate
//! the ambient vector and project it back onto the tangent module.

use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use crate::check::Outcome;
use crate::connection::sum_star;
use crate::curvature::{first_bianchi_check, ricci_of, Handedness, RicciBundle};
use crate::embedding::{eta_pair, fluctuation_metric, IsometricEmbedding};
use crate::error::{Error, Result};
use crate::metric::{InverseMetric, NcMetric};
use crate::scalar::{BasePoint, Scalar};
use crate::series::HbarSeries;
use crate::star::StarProduct;
use crate::tensor::{index_tuples, label, Tensor};

/// `⋆g_{ij} = ∂_iX ⋆_η ∂_jX` with its two-sided inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct StarMetric {
    pub metric: NcMetric,
    pub inverse: InverseMetric,
}

pub fn star_metric_from_embedding(
    x: &IsometricEmbedding,
    star: &StarProduct,
    truncation: usize,
) -> Result<StarMetric> {
    let metric = fluctuation_metric(x, star, truncation)?;
    if !metric.check_invertible() {
        return Err(Error::NotInvertible(
            "⋆g_{ij}[0] is singular at the base point".into(),
        ));
    }
    let inverse = metric.star_inverse()?;
    Ok(StarMetric { metric, inverse })
}

fn embedding_base(x: &IsometricEmbedding) -> Option<Arc<BasePoint>> {
    x.components()
        .iter()
        .find_map(|c| c.as_jet().map(|j| j.base_point().clone()))
}

/// Rejects a tabulated star product that fails associativity on seeded samples.
///
/// Moyal products are accepted without sampling.
pub fn require_associative(
    star: &StarProduct,
    base: Option<Arc<BasePoint>>,
    truncation: usize,
    seed: u64,
) -> Result<()> {
    let StarProduct::General(general) = star else {
        return Ok(());
    };
    let depth = general
        .orders()
        .iter()
        .flat_map(|op| op.terms.iter())
        .map(|t| t.left.iter().sum::<usize>().max(t.right.iter().sum()))
        .max()
        .unwrap_or(0);
    let outcome = star.validate_associativity(
        base,
        truncation.max(3),
        2 * depth * truncation.max(3) + 2,
        seed,
        6,
    )?;
    if outcome.passed {
        Ok(())
    } else {
        Err(Error::InvalidStarProduct(format!(
            "not associative: {}",
            outcome.details
        )))
    }
}

/// `⋆Γ^k_{ij}` at `[i, j, k]` for the left and right quasi-connections.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiConnection {
    pub upper: Tensor,
    pub upper_right: Tensor,
}

impl QuasiConnection {
    pub fn dim(&self) -> usize {
        self.upper.dim()
    }

    fn column(&self, j: usize, k: usize, hand: Handedness) -> Vec<HbarSeries> {
        let t = match hand {
            Handedness::Left => &self.upper,
            Handedness::Right => &self.upper_right,
        };
        (0..self.dim()).map(|m| t.get(&[j, k, m]).clone()).collect()
    }
}

/// An embedding together with its star metric.
#[derive(Clone, Debug)]
pub struct QuasiGeometry {
    embedding: IsometricEmbedding,
    star_metric: StarMetric,
    tangents: Vec<Vec<HbarSeries>>,
}

impl QuasiGeometry {
    /// Checks associativity of tabulated products, then builds and inverts `⋆g`.
    pub fn new(
        x: &IsometricEmbedding,
        star: &StarProduct,
        truncation: usize,
        seed: u64,
    ) -> Result<Self> {
        require_associative(star, embedding_base(x), truncation, seed)?;
        let star_metric = star_metric_from_embedding(x, star, truncation)?;
        let tangents = (0..x.dim())
            .map(|i| x.first(i, truncation))
            .collect::<Result<_>>()?;
        Ok(QuasiGeometry {
            embedding: x.clone(),
            star_metric,
            tangents,
        })
    }

    pub fn metric(&self) -> &NcMetric {
        &self.star_metric.metric
    }

    pub fn inverse(&self) -> &InverseMetric {
        &self.star_metric.inverse
    }

    pub fn star(&self) -> &StarProduct {
        self.metric().star()
    }

    pub fn dim(&self) -> usize {
        self.embedding.dim()
    }

    fn eta(&self) -> &[i8] {
        self.embedding.signature()
    }

    /// `σ(a^i⋆E_i) = a^i⋆∂_iX` or `σ̃(Ẽ_i⋆ã^i) = ∂_iX⋆ã^i`.
    pub fn sigma(&self, a: &[HbarSeries], hand: Handedness) -> Result<Vec<HbarSeries>> {
        let star = self.star();
        (0..self.embedding.ambient_dim())
            .map(|alpha| match hand {
                Handedness::Left => sum_star(
                    star,
                    (0..self.dim()).map(|i| (&a[i], &self.tangents[i][alpha])),
                ),
                Handedness::Right => sum_star(
                    star,
                    (0..self.dim()).map(|i| (&self.tangents[i][alpha], &a[i])),
                ),
            })
            .collect()
    }

    /// Coefficients of the tangential part of `Y`:
    /// `y^i = (Y⋆_η∂_jX)⋆⋆g^{ji}` (left) or `ỹ^i = ⋆g^{ij}⋆(∂_jX⋆_ηY)` (right).
    pub fn tangential(&self, y: &[HbarSeries], hand: Handedness) -> Result<Vec<HbarSeries>> {
        let n = self.dim();
        let star = self.star();
        let ginv = self.inverse();
        let pairings: Vec<HbarSeries> = (0..n)
            .map(|j| match hand {
                Handedness::Left => eta_pair(star, self.eta(), y, &self.tangents[j]),
                Handedness::Right => eta_pair(star, self.eta(), &self.tangents[j], y),
            })
            .collect::<Result<_>>()?;
        (0..n)
            .map(|i| match hand {
                Handedness::Left => sum_star(star, (0..n).map(|j| (&pairings[j], ginv.get(j, i)))),
                Handedness::Right => sum_star(star, (0..n).map(|j| (ginv.get(i, j), &pairings[j]))),
            })
            .collect()
    }

    /// `Y^⊥ = Y − σ(pr₁ Y)`.
    pub fn normal_part(&self, y: &[HbarSeries], hand: Handedness) -> Result<Vec<HbarSeries>> {
        let top = self.sigma(&self.tangential(y, hand)?, hand)?;
        y.iter().zip(&top).map(|(a, b)| a.sub(b)).collect()
    }

    /// `⋆∇_iV = σ⁻¹(pr₁(∂_iσ(V)))` on component vectors.
    pub fn covariant_derivative(
        &self,
        a: &[HbarSeries],
        i: usize,
        hand: Handedness,
    ) -> Result<Vec<HbarSeries>> {
        let lifted = self.sigma(a, hand)?;
        let d: Vec<HbarSeries> = lifted.iter().map(|c| c.partial(i)).collect::<Result<_>>()?;
        self.tangential(&d, hand)
    }

    /// `⋆Γ^k_{ij} = (∂_i∂_jX⋆_η∂_lX)⋆⋆g^{lk}` and `⋆Γ̃^k_{ij} = ⋆g^{kl}⋆(∂_lX⋆_η∂_i∂_jX)`.
    pub fn connection(&self) -> Result<QuasiConnection> {
        let n = self.dim();
        let order = self.metric().truncation();
        let columns = |hand: Handedness| -> Result<Vec<Vec<HbarSeries>>> {
            index_tuples(n, 2)
                .par_iter()
                .map(|t| self.tangential(&self.embedding.second(t[0], t[1], order)?, hand))
                .collect()
        };
        let left = columns(Handedness::Left)?;
        let right = columns(Handedness::Right)?;
        Ok(QuasiConnection {
            upper: Tensor::try_from_fn(n, 3, |x| Ok(left[x[0] * n + x[1]][x[2]].clone()))?,
            upper_right: Tensor::try_from_fn(n, 3, |x| Ok(right[x[0] * n + x[1]][x[2]].clone()))?,
        })
    }

    /// Components of `[⋆∇_i, ⋆∇_j]E_k` at `[m, k, i, j]`.
    pub fn curvature_operator(&self, conn: &QuasiConnection, hand: Handedness) -> Result<Tensor> {
        let n = self.dim();
        let comps: Vec<Vec<HbarSeries>> = index_tuples(n, 3)
            .par_iter()
            .map(|t| {
                let (k, i, j) = (t[0], t[1], t[2]);
                let a = self.covariant_derivative(&conn.column(j, k, hand), i, hand)?;
                let b = self.covariant_derivative(&conn.column(i, k, hand), j, hand)?;
                a.iter().zip(&b).map(|(x, y)| x.sub(y)).collect()
            })
            .collect::<Result<_>>()?;
        Tensor::try_from_fn(n, 4, |x| {
            Ok(comps[(x[1] * n + x[2]) * n + x[3]][x[0]].clone())
        })
    }

    /// Both `⋆`-Riemann tensors, the eight Ricci arrays and the two scalar curvatures.
    pub fn curvature(&self, conn: &QuasiConnection) -> Result<StarCurvature> {
        let n = self.dim();
        let star = self.star();
        let g = self.metric();
        let operator = self.curvature_operator(conn, Handedness::Left)?;
        let operator_right = self.curvature_operator(conn, Handedness::Right)?;
        let riemann = Tensor::try_from_fn(n, 4, |x| {
            let (l, k, i, j) = (x[0], x[1], x[2], x[3]);
            sum_star(
                star,
                (0..n).map(|m| (operator.get(&[m, k, i, j]), g.get(m, l))),
            )
        })?;
        let riemann_right = Tensor::try_from_fn(n, 4, |x| {
            let (l, k, i, j) = (x[0], x[1], x[2], x[3]);
            Ok(sum_star(
                star,
                (0..n).map(|m| (g.get(k, m), operator_right.get(&[m, l, i, j]))),
            )?
            .neg())
        })?;
        let left = ricci_of(star, self.inverse(), &riemann)?;
        let right = ricci_of(star, self.inverse(), &riemann_right)?;
        Ok(StarCurvature {
            operator,
            operator_right,
            riemann,
            riemann_right,
            left,
            right,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarCurvature {
    /// `[⋆∇_i, ⋆∇_j]E_k` at `[m, k, i, j]`.
    pub operator: Tensor,
    /// `[⋆∇̃_i, ⋆∇̃_j]Ẽ_l` at `[m, l, i, j]`.
    pub operator_right: Tensor,
    /// `⋆R_{lkij}`.
    pub riemann: Tensor,
    /// `⋆R̃_{lkij} = −⋆g_{km}⋆(⋆R̃_{ij}Ẽ_l)^m`.
    pub riemann_right: Tensor,
    /// `⋆R_{kj}`, `⋆Θ_{il}`, `⋆R^p_j`, `⋆Θ^p_i`, `⋆R`.
    pub left: RicciBundle,
    /// `⋆R̃_{kj}`, `⋆Θ̃_{il}`, `⋆R̃^p_j`, `⋆Θ̃^p_i`, `⋆R̃`.
    pub right: RicciBundle,
}

/// `⋆∇_iE_j = ⋆∇_jE_i` and `⋆∇̃_iẼ_j = ⋆∇̃_jẼ_i`.
pub fn check_torsion_free(conn: &QuasiConnection) -> Result<Outcome> {
    let n = conn.dim();
    for (name, t) in [("⋆Γ", &conn.upper), ("⋆Γ̃", &conn.upper_right)] {
        for x in index_tuples(n, 3) {
            let swapped = [x[1], x[0], x[2]];
            if let Some(q) = t.get(&x).first_difference(t.get(&swapped))? {
                return Ok(Outcome::fail(
                    format!(
                        "{name}_{} is not symmetric in its lower indices at ħ^{q}",
                        label(&x)
                    ),
                    json!({"indices": x.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q}),
                ));
            }
        }
    }
    Ok(Outcome::pass(
        "left and right quasi-connections are torsion free",
    ))
}

/// Cyclic sums of both `⋆`-curvature operators vanish.
pub fn first_bianchi_star_check(curv: &StarCurvature) -> Result<Outcome> {
    let left = first_bianchi_check(&curv.operator)?;
    if !left.passed {
        return Ok(left);
    }
    let right = first_bianchi_check(&curv.operator_right)?;
    if !right.passed {
        return Ok(Outcome::fail(
            format!("right: {}", right.details),
            right.counterexample.unwrap_or_default(),
        ));
    }
    Ok(Outcome::pass(
        "first Bianchi identity holds for both quasi-connections",
    ))
}

fn first_nonzero(v: &[HbarSeries]) -> Result<Option<(usize, usize)>> {
    for (a, s) in v.iter().enumerate() {
        if let Some(q) = s.first_difference(&HbarSeries::zero(s.truncation()))? {
            return Ok(Some((a, q)));
        }
    }
    Ok(None)
}

fn first_mismatch(a: &[HbarSeries], b: &[HbarSeries]) -> Result<Option<(usize, usize)>> {
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if let Some(q) = x.first_difference(y)? {
            return Ok(Some((i, q)));
        }
    }
    Ok(None)
}

/// Tangential/normal splitting of each sample: the remainder pairs to zero
/// with every tangent vector and `pr₁` is idempotent.
pub fn check_decomposition(geom: &QuasiGeometry, samples: &[Vec<HbarSeries>]) -> Result<Outcome> {
    let star = geom.star();
    for (s, y) in samples.iter().enumerate() {
        for hand in [Handedness::Left, Handedness::Right] {
            let coeffs = geom.tangential(y, hand)?;
            let top = geom.sigma(&coeffs, hand)?;
            let perp: Vec<HbarSeries> = y
                .iter()
                .zip(&top)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<_>>()?;
            let pairings: Vec<HbarSeries> = (0..geom.dim())
                .map(|j| match hand {
                    Handedness::Left => eta_pair(star, geom.eta(), &perp, &geom.tangents[j]),
                    Handedness::Right => eta_pair(star, geom.eta(), &geom.tangents[j], &perp),
                })
                .collect::<Result<_>>()?;
            if let Some((j, q)) = first_nonzero(&pairings)? {
                return Ok(Outcome::fail(
                    format!("{hand:?} normal remainder of sample {s} pairs nontrivially with ∂_{}X at ħ^{q}", j + 1),
                    json!({"sample": s, "direction": j + 1, "order": q}),
                ));
            }
            if let Some((i, q)) = first_mismatch(&geom.tangential(&top, hand)?, &coeffs)? {
                return Ok(Outcome::fail(
                    format!(
                        "{hand:?} projection is not idempotent on sample {s} (component {}, ħ^{q})",
                        i + 1
                    ),
                    json!({"sample": s, "component": i + 1, "order": q}),
                ));
            }
            if let Some((i, q)) = first_nonzero(&geom.tangential(&perp, hand)?)? {
                return Ok(Outcome::fail(
                    format!("{hand:?} normal remainder of sample {s} has a tangential part (component {}, ħ^{q})", i + 1),
                    json!({"sample": s, "component": i + 1, "order": q}),
                ));
            }
        }
    }
    Ok(Outcome::pass(format!(
        "{} ambient samples split into tangential and normal parts",
        samples.len()
    )))
}

/// `σ` and `σ̃` are recovered by the projection: `pr₁(σ(a)) = a`.
pub fn check_sigma_injective(geom: &QuasiGeometry, samples: &[Vec<HbarSeries>]) -> Result<Outcome> {
    for (s, a) in samples.iter().enumerate() {
        for hand in [Handedness::Left, Handedness::Right] {
            let back = geom.tangential(&geom.sigma(a, hand)?, hand)?;
            if let Some((i, q)) = first_mismatch(&back, a)? {
                return Ok(Outcome::fail(
                    format!(
                        "{hand:?} σ loses component {} of sample {s} at ħ^{q}",
                        i + 1
                    ),
                    json!({"sample": s, "component": i + 1, "order": q}),
                ));
            }
        }
    }
    Ok(Outcome::pass(format!(
        "σ and σ̃ invert on {} samples",
        samples.len()
    )))
}

/// Everything the canonical pipeline produces for the same embedding and Moyal product.
pub struct CanonicalReference<'a> {
    pub metric: &'a NcMetric,
    pub inverse: &'a InverseMetric,
    pub upper: &'a Tensor,
    pub upper_right: &'a Tensor,
    pub riemann: &'a Tensor,
    pub riemann_right: &'a Tensor,
    pub ricci: &'a RicciBundle,
}

/// Exact agreement of the quasi-connection pipeline with the canonical one.
pub fn check_against_canonical(
    geom: &QuasiGeometry,
    conn: &QuasiConnection,
    curv: &StarCurvature,
    reference: &CanonicalReference<'_>,
) -> Result<Outcome> {
    let mut pairs: Vec<(String, &Tensor, &Tensor)> = vec![
        (
            "⋆g".into(),
            geom.metric().tensor(),
            reference.metric.tensor(),
        ),
        (
            "⋆g⁻¹".into(),
            geom.inverse().tensor(),
            reference.inverse.tensor(),
        ),
        ("⋆Γ".into(), &conn.upper, reference.upper),
        ("⋆Γ̃".into(), &conn.upper_right, reference.upper_right),
        ("⋆R".into(), &curv.riemann, reference.riemann),
        ("⋆R̃".into(), &curv.riemann_right, reference.riemann_right),
    ];
    for (side, b) in [("", &curv.left), ("~", &curv.right)] {
        pairs.push((format!("⋆R{side}_kj"), &b.ricci, &reference.ricci.ricci));
        pairs.push((format!("⋆Θ{side}_il"), &b.theta, &reference.ricci.theta));
        pairs.push((
            format!("⋆R{side}^p_j"),
            &b.ricci_up,
            &reference.ricci.ricci_up,
        ));
        pairs.push((
            format!("⋆Θ{side}^p_i"),
            &b.theta_up,
            &reference.ricci.theta_up,
        ));
    }
    for (name, a, b) in &pairs {
        if let Some((idx, q)) = a.first_difference(b)? {
            return Ok(Outcome::fail(
                format!(
                    "{name}_{} differs from the canonical value at ħ^{q}",
                    label(&idx)
                ),
                json!({"array": name, "indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q}),
            ));
        }
    }
    for (name, s) in [("⋆R", &curv.left.scalar), ("⋆R̃", &curv.right.scalar)] {
        if let Some(q) = s.first_difference(&reference.ricci.scalar)? {
            return Ok(Outcome::fail(
                format!("scalar curvature {name} differs from the canonical value at ħ^{q}"),
                json!({"array": name, "order": q}),
            ));
        }
    }
    Ok(Outcome::pass(format!(
        "{} arrays and both scalar curvatures agree",
        pairs.len()
    )))
}

/// Scalars `a^i` as constant-in-ħ series, for sampling vectors.
pub fn lift(values: Vec<Scalar>, truncation: usize) -> Vec<HbarSeries> {
    values
        .into_iter()
        .map(|v| HbarSeries::constant(truncation, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::scalar::Jet;
    use crate::star::{BidiffOperator, BidiffTerm, GeneralStar, ThetaMatrix};

    /// `exp(ħ∂_1⊗∂_2)`: associative, not skew.
    fn standard_ordered(orders: usize) -> GeneralStar {
        GeneralStar::exponential(vec![vec![int(0), int(1)], vec![int(0), int(0)]], orders).unwrap()
    }

    fn identity(order: usize) -> IsometricEmbedding {
        IsometricEmbedding::identity(Arc::new(BasePoint::rational(&[int(1), int(-1)])), order)
            .unwrap()
    }

    #[test]
    fn identity_embedding_is_flat_for_a_tabulated_product() {
        let star = StarProduct::General(standard_ordered(3));
        let geom = QuasiGeometry::new(&identity(8), &star, 3, 1).unwrap();
        let delta = crate::metric::identity(2, 3);
        assert_eq!(
            geom.metric().tensor().first_difference(&delta).unwrap(),
            None
        );
        let conn = geom.connection().unwrap();
        assert!(conn.upper.is_zero() && conn.upper_right.is_zero());
        let curv = geom.curvature(&conn).unwrap();
        assert!(curv.riemann.is_zero() && curv.riemann_right.is_zero());
        assert!(curv.left.scalar.is_zero() && curv.right.scalar.is_zero());
    }

    #[test]
    fn tangent_vectors_project_to_basis() {
        let star = StarProduct::moyal(ThetaMatrix::single(2, 0, 1, int(1)).unwrap());
        let geom = QuasiGeometry::new(&identity(8), &star, 3, 1).unwrap();
        for k in 0..2 {
            let y = geom.tangents[k].clone();
            let coeffs = geom.tangential(&y, Handedness::Left).unwrap();
            for (i, c) in coeffs.iter().enumerate() {
                let want = if i == k {
                    HbarSeries::one(3)
                } else {
                    HbarSeries::zero(3)
                };
                assert_eq!(c.first_difference(&want).unwrap(), None);
            }
        }
    }

    #[test]
    fn normal_vector_has_no_tangential_part() {
        // ℝ² ⊂ ℝ³ as (x, y, 0): e₃ is normal.
        let base = Arc::new(BasePoint::rational(&[int(0), int(0)]));
        let x = Jet::coordinate(base.clone(), 6, 0).unwrap();
        let y = Jet::coordinate(base, 6, 1).unwrap();
        let emb =
            IsometricEmbedding::euclidean(2, vec![Scalar::Jet(x), Scalar::Jet(y), Scalar::zero()])
                .unwrap();
        let star = StarProduct::moyal(ThetaMatrix::single(2, 0, 1, int(1)).unwrap());
        let geom = QuasiGeometry::new(&emb, &star, 2, 1).unwrap();
        let e3 = lift(vec![Scalar::zero(), Scalar::zero(), Scalar::one()], 2);
        let coeffs = geom.tangential(&e3, Handedness::Left).unwrap();
        assert!(coeffs.iter().all(HbarSeries::is_zero));
    }

    #[test]
    fn non_associative_table_is_rejected() {
        let theta = ThetaMatrix::single(2, 0, 1, int(1)).unwrap();
        let mut b2 = theta.moyal_operator(2);
        b2.terms.push(BidiffTerm {
            coeff: Scalar::one(),
            left: vec![1, 0],
            right: vec![1, 0],
        });
        let star =
            StarProduct::General(GeneralStar::new(2, vec![theta.moyal_operator(1), b2]).unwrap());
        let err = QuasiGeometry::new(&identity(8), &star, 3, 5).unwrap_err();
        assert!(matches!(err, Error::InvalidStarProduct(_)));
    }

    #[test]
    fn injected_torsion_breaks_first_bianchi() {
        // Needs three directions: in two the cyclic sum of a torsion vanishes.
        let base = Arc::new(BasePoint::rational(&[int(1), int(-1), int(2)]));
        let star = StarProduct::pointwise(3);
        let emb = IsometricEmbedding::identity(base.clone(), 6).unwrap();
        let geom = QuasiGeometry::new(&emb, &star, 1, 1).unwrap();
        let mut conn = geom.connection().unwrap();
        let x1 = Scalar::Jet(Jet::coordinate(base, 6, 0).unwrap());
        conn.upper.set(&[1, 2, 0], HbarSeries::constant(1, x1));
        assert!(!check_torsion_free(&conn).unwrap().passed);
        let curv = geom.curvature(&conn).unwrap();
        assert!(!first_bianchi_star_check(&curv).unwrap().passed);
    }

    #[test]
    fn empty_table_is_the_pointwise_product() {
        let star = StarProduct::General(GeneralStar::new(2, Vec::<BidiffOperator>::new()).unwrap());
        assert!(require_associative(&star, None, 3, 0).is_ok());
    }
}
