//! Riemann and Ricci curvatures, their covariant derivatives, and the identities they satisfy.

use rayon::prelude::*;
use serde_json::json;

use crate::check::Outcome;
use crate::connection::{
    check_chiral_parity, check_compatibility, check_connection_parity, sum_star, Chiral, Connection,
};
use crate::error::{Error, Result};
use crate::metric::{check_metric_parity, InverseMetric, NcMetric};
use crate::series::HbarSeries;
use crate::star::StarProduct;
use crate::tensor::{index_tuples, label, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Handedness {
    Left,
    Right,
}

/// Components of `∇_iV`.
///
/// Left: `V = a^k⋆E_k`, `(∇_iV)^k = ∂_ia^k + a^j⋆Γ^k_{ij}`.
/// Right: `V = Ẽ_k⋆ã^k`, `(∇̃_iV)^k = ∂_iã^k + Γ̃^k_{ij}⋆ã^j`.
pub fn covariant_derivative_vector(
    star: &StarProduct,
    conn: &Connection,
    v: &[HbarSeries],
    i: usize,
    hand: Handedness,
) -> Result<Vec<HbarSeries>> {
    let n = conn.dim();
    (0..n)
        .map(|k| {
            let corr = match hand {
                Handedness::Left => sum_star(star, (0..n).map(|j| (&v[j], conn.gamma(k, i, j))))?,
                Handedness::Right => {
                    sum_star(star, (0..n).map(|j| (conn.gamma_right(k, i, j), &v[j])))?
                }
            };
            v[k].partial(i)?.add(&corr)
        })
        .collect()
}

/// Components of `[∇_i, ∇_j]E_k` (left) or `[∇̃_i, ∇̃_j]Ẽ_k` (right).
pub fn curvature_operator_components(
    star: &StarProduct,
    conn: &Connection,
    i: usize,
    j: usize,
    k: usize,
    hand: Handedness,
) -> Result<Vec<HbarSeries>> {
    let n = conn.dim();
    let basis_derivative = |a: usize| -> Vec<HbarSeries> {
        (0..n)
            .map(|m| match hand {
                Handedness::Left => conn.gamma(m, a, k).clone(),
                Handedness::Right => conn.gamma_right(m, a, k).clone(),
            })
            .collect()
    };
    let a = covariant_derivative_vector(star, conn, &basis_derivative(j), i, hand)?;
    let b = covariant_derivative_vector(star, conn, &basis_derivative(i), j, hand)?;
    a.iter().zip(&b).map(|(x, y)| x.sub(y)).collect()
}

/// `R^m_{kij}` at index `[m, k, i, j]` from the operator `[∇_i, ∇_j]`.
pub fn operator_tensor(star: &StarProduct, conn: &Connection, hand: Handedness) -> Result<Tensor> {
    let n = conn.dim();
    let comps: Vec<Vec<HbarSeries>> = index_tuples(n, 3)
        .par_iter()
        .map(|t| curvature_operator_components(star, conn, t[1], t[2], t[0], hand))
        .collect::<Result<_>>()?;
    // comps is indexed by (k, i, j); reorder to (m, k, i, j).
    Tensor::try_from_fn(n, 4, |x| {
        Ok(comps[(x[1] * n + x[2]) * n + x[3]][x[0]].clone())
    })
}

/// `R^m_{kij}` and `R_{lkij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Riemann {
    pub operator: Tensor,
    pub lower: Tensor,
}

/// `R_{lkij}` by three routes that must agree: pairing `[∇_i, ∇_j]E_k` with `Ẽ_l`,
/// the `∂Γ` formula and the `∂Γ̃` formula.
pub fn riemann(g: &NcMetric, ginv: &InverseMetric, conn: &Connection) -> Result<Riemann> {
    let compat = check_compatibility(g, conn)?;
    if !compat.passed {
        return Err(Error::NotCanonical(compat.details));
    }
    let n = g.dim();
    let star = g.star();
    let operator = operator_tensor(star, conn, Handedness::Left)?;
    let paired = Tensor::try_from_fn(n, 4, |x| {
        let (l, k, i, j) = (x[0], x[1], x[2], x[3]);
        sum_star(
            star,
            (0..n).map(|m| (operator.get(&[m, k, i, j]), g.get(m, l))),
        )
    })?;
    // Γ_{iks}⋆g^{sr} at [i, k, r].
    let lowered_raised = Tensor::try_from_fn(n, 3, |x| {
        sum_star(
            star,
            (0..n).map(|s| (conn.lower.get(&[x[0], x[1], s]), ginv.get(s, x[2]))),
        )
    })?;
    let quadratic = |l: usize, k: usize, i: usize, j: usize| -> Result<HbarSeries> {
        sum_star(
            star,
            (0..n).map(|r| {
                (
                    lowered_raised.get(&[i, k, r]),
                    conn.lower_right.get(&[j, l, r]),
                )
            }),
        )?
        .sub(&sum_star(
            star,
            (0..n).map(|r| {
                (
                    lowered_raised.get(&[j, k, r]),
                    conn.lower_right.get(&[i, l, r]),
                )
            }),
        )?)
    };
    let gamma_form = Tensor::try_from_fn(n, 4, |x| {
        let (l, k, i, j) = (x[0], x[1], x[2], x[3]);
        conn.lower
            .get(&[j, k, l])
            .partial(i)?
            .sub(&conn.lower.get(&[i, k, l]).partial(j)?)?
            .add(&quadratic(l, k, i, j)?)
    })?;
    let gamma_right_form = Tensor::try_from_fn(n, 4, |x| {
        let (l, k, i, j) = (x[0], x[1], x[2], x[3]);
        conn.lower_right
            .get(&[i, l, k])
            .partial(j)?
            .sub(&conn.lower_right.get(&[j, l, k]).partial(i)?)?
            .add(&quadratic(l, k, i, j)?)
    })?;
    for (name, other) in [("∂Γ", &gamma_form), ("∂Γ̃", &gamma_right_form)] {
        if let Some((idx, q)) = paired.first_difference(other)? {
            return Err(Error::InternalDisagreement(format!(
                "R_{} from the curvature operator and from the {name} formula differ at ħ^{q}",
                label(&idx)
            )));
        }
    }
    Ok(Riemann {
        operator,
        lower: paired,
    })
}

/// `R̃_{lkij} = −g_{km}⋆R̃^m_{lij}` from the right operator `[∇̃_i, ∇̃_j]`.
pub fn right_riemann(g: &NcMetric, conn: &Connection) -> Result<Tensor> {
    let n = g.dim();
    let star = g.star();
    let op = operator_tensor(star, conn, Handedness::Right)?;
    Tensor::try_from_fn(n, 4, |x| {
        let (l, k, i, j) = (x[0], x[1], x[2], x[3]);
        Ok(sum_star(star, (0..n).map(|m| (g.get(k, m), op.get(&[m, l, i, j]))))?.neg())
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RicciBundle {
    /// `R_{kj} = R_{lkij}⋆g^{li}`.
    pub ricci: Tensor,
    /// `Θ_{il} = g^{jk}⋆R_{lkij}`.
    pub theta: Tensor,
    /// `R^p_j` at `[p, j]`.
    pub ricci_up: Tensor,
    /// `Θ^p_i` at `[p, i]`.
    pub theta_up: Tensor,
    pub scalar: HbarSeries,
}

pub fn ricci_bundle(g: &NcMetric, ginv: &InverseMetric, riem: &Riemann) -> Result<RicciBundle> {
    ricci_of(g.star(), ginv, &riem.lower)
}

/// Ricci contractions of any `R_{lkij}`; the two traces must agree.
pub fn ricci_of(star: &StarProduct, ginv: &InverseMetric, r: &Tensor) -> Result<RicciBundle> {
    let n = r.dim();
    let ricci = Tensor::try_from_fn(n, 2, |x| {
        let (k, j) = (x[0], x[1]);
        sum_star(
            star,
            index_tuples(n, 2)
                .iter()
                .map(|li| (r.get(&[li[0], k, li[1], j]), ginv.get(li[0], li[1])))
                .collect::<Vec<_>>()
                .into_iter(),
        )
    })?;
    let theta = Tensor::try_from_fn(n, 2, |x| {
        let (i, l) = (x[0], x[1]);
        sum_star(
            star,
            index_tuples(n, 2)
                .iter()
                .map(|jk| (ginv.get(jk[0], jk[1]), r.get(&[l, jk[1], i, jk[0]])))
                .collect::<Vec<_>>()
                .into_iter(),
        )
    })?;
    let ricci_up = Tensor::try_from_fn(n, 2, |x| {
        sum_star(
            star,
            (0..n).map(|k| (ginv.get(x[0], k), ricci.get(&[k, x[1]]))),
        )
    })?;
    let theta_up = Tensor::try_from_fn(n, 2, |x| {
        sum_star(
            star,
            (0..n).map(|l| (theta.get(&[x[1], l]), ginv.get(l, x[0]))),
        )
    })?;
    let trace = |t: &Tensor| -> Result<HbarSeries> {
        (1..n).try_fold(t.get(&[0, 0]).clone(), |acc, i| acc.add(t.get(&[i, i])))
    };
    let scalar = trace(&ricci_up)?;
    let other = trace(&theta_up)?;
    if let Some(q) = scalar.first_difference(&other)? {
        return Err(Error::InternalDisagreement(format!(
            "traces of the two raised Ricci curvatures differ at ħ^{q}"
        )));
    }
    Ok(RicciBundle {
        ricci,
        theta,
        ricci_up,
        theta_up,
        scalar,
    })
}

/// Covariant derivatives of the curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureDerivative {
    /// Components `n` of `(∇_s𝓡)_{E_iE_j}E_k` at `[s, n, k, i, j]`.
    pub operator: Tensor,
    /// `∇_sR_{lkij}` at `[s, l, k, i, j]`.
    pub lower: Tensor,
    /// `∇_sR^p_j` at `[s, p, j]`.
    pub ricci_up: Tensor,
    /// `∇_sΘ^p_i` at `[s, p, i]`.
    pub theta_up: Tensor,
    /// `∇_sR` at `[s]`.
    pub scalar: Tensor,
}

/// `(∇_s𝓡)_{E_iE_j}E_k = ∇_s(𝓡_{E_iE_j}E_k) − Γ^m_{si}⋆𝓡_{E_mE_j}E_k − Γ^m_{sj}⋆𝓡_{E_iE_m}E_k − Γ^m_{sk}⋆𝓡_{E_iE_j}E_m`
/// and its pairings and contractions.
pub fn curvature_covariant_derivative(
    g: &NcMetric,
    ginv: &InverseMetric,
    conn: &Connection,
    riem: &Riemann,
) -> Result<CurvatureDerivative> {
    let n = g.dim();
    let star = g.star();
    let r = &riem.operator;
    let comps: Vec<Vec<HbarSeries>> = index_tuples(n, 4)
        .par_iter()
        .map(|t| {
            let (s, k, i, j) = (t[0], t[1], t[2], t[3]);
            let v: Vec<HbarSeries> = (0..n).map(|p| r.get(&[p, k, i, j]).clone()).collect();
            let mut out = covariant_derivative_vector(star, conn, &v, s, Handedness::Left)?;
            for (p, o) in out.iter_mut().enumerate() {
                let corr = sum_star(
                    star,
                    (0..n)
                        .map(|m| (conn.gamma(m, s, i), r.get(&[p, k, m, j])))
                        .chain((0..n).map(|m| (conn.gamma(m, s, j), r.get(&[p, k, i, m]))))
                        .chain((0..n).map(|m| (conn.gamma(m, s, k), r.get(&[p, m, i, j]))))
                        .collect::<Vec<_>>()
                        .into_iter(),
                )?;
                *o = o.sub(&corr)?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let operator = Tensor::try_from_fn(n, 5, |x| {
        Ok(comps[((x[0] * n + x[2]) * n + x[3]) * n + x[4]][x[1]].clone())
    })?;
    let lower = Tensor::try_from_fn(n, 5, |x| {
        let (s, l, k, i, j) = (x[0], x[1], x[2], x[3], x[4]);
        sum_star(
            star,
            (0..n).map(|m| (operator.get(&[s, m, k, i, j]), g.get(m, l))),
        )
    })?;
    // Σ_{l,i} ∇_sR_{lkij}⋆g^{li} at [s, k, j] and Σ_{j,k} g^{jk}⋆∇_sR_{lkij} at [s, i, l].
    let right_contracted = Tensor::try_from_fn(n, 3, |x| {
        let (s, k, j) = (x[0], x[1], x[2]);
        sum_star(
            star,
            index_tuples(n, 2)
                .iter()
                .map(|li| (lower.get(&[s, li[0], k, li[1], j]), ginv.get(li[0], li[1])))
                .collect::<Vec<_>>()
                .into_iter(),
        )
    })?;
    let left_contracted = Tensor::try_from_fn(n, 3, |x| {
        let (s, i, l) = (x[0], x[1], x[2]);
        sum_star(
            star,
            index_tuples(n, 2)
                .iter()
                .map(|jk| (ginv.get(jk[0], jk[1]), lower.get(&[s, l, jk[1], i, jk[0]])))
                .collect::<Vec<_>>()
                .into_iter(),
        )
    })?;
    let ricci_up = Tensor::try_from_fn(n, 3, |x| {
        let (s, p, j) = (x[0], x[1], x[2]);
        sum_star(
            star,
            (0..n).map(|k| (ginv.get(p, k), right_contracted.get(&[s, k, j]))),
        )
    })?;
    let theta_up = Tensor::try_from_fn(n, 3, |x| {
        let (s, p, i) = (x[0], x[1], x[2]);
        sum_star(
            star,
            (0..n).map(|l| (left_contracted.get(&[s, i, l]), ginv.get(l, p))),
        )
    })?;
    let scalar = Tensor::try_from_fn(n, 1, |x| {
        (1..n).try_fold(ricci_up.get(&[x[0], 0, 0]).clone(), |acc, j| {
            acc.add(ricci_up.get(&[x[0], j, j]))
        })
    })?;
    Ok(CurvatureDerivative {
        operator,
        lower,
        ricci_up,
        theta_up,
        scalar,
    })
}

fn nonzero(what: &str, idx: &[usize], s: &HbarSeries) -> Result<Option<Outcome>> {
    let zero = HbarSeries::zero(s.truncation());
    Ok(s.first_difference(&zero)?.map(|q| {
        Outcome::fail(
            format!("{what} is nonzero at ({}) order ħ^{q}", label(idx)),
            json!({"indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q,
                   "value": s.coefficient(q).ok()}),
        )
    }))
}

/// `𝓡_{E_iE_j}E_k + 𝓡_{E_jE_k}E_i + 𝓡_{E_kE_i}E_j = 0` on `R^m_{kij}`.
pub fn first_bianchi_check(operator: &Tensor) -> Result<Outcome> {
    let n = operator.dim();
    for t in index_tuples(n, 4) {
        let (m, k, i, j) = (t[0], t[1], t[2], t[3]);
        let sum = operator
            .get(&[m, k, i, j])
            .add(operator.get(&[m, i, j, k]))?
            .add(operator.get(&[m, j, k, i]))?;
        if let Some(o) = nonzero("first Bianchi sum", &[m, i, j, k], &sum)? {
            return Ok(o);
        }
    }
    Ok(Outcome::pass("cyclic sum of curvature operators vanishes"))
}

/// Second Bianchi identity on both the operator components and the lowered tensor.
pub fn second_bianchi_check(d: &CurvatureDerivative) -> Result<Outcome> {
    let n = d.lower.dim();
    for t in index_tuples(n, 5) {
        let (a, p, i, j, k) = (t[0], t[1], t[2], t[3], t[4]);
        let op = d
            .operator
            .get(&[i, a, p, j, k])
            .add(d.operator.get(&[j, a, p, k, i]))?
            .add(d.operator.get(&[k, a, p, i, j]))?;
        if let Some(o) = nonzero("(∇_i𝓡)_jk + (∇_j𝓡)_ki + (∇_k𝓡)_ij", &[i, j, k, p, a], &op)?
        {
            return Ok(o);
        }
        let low = d
            .lower
            .get(&[i, a, p, j, k])
            .add(d.lower.get(&[j, a, p, k, i]))?
            .add(d.lower.get(&[k, a, p, i, j]))?;
        if let Some(o) = nonzero("∇_iR_qpjk + ∇_jR_qpki + ∇_kR_qpij", &[a, p, i, j, k], &low)?
        {
            return Ok(o);
        }
    }
    Ok(Outcome::pass("cyclic sum of ∇𝓡 vanishes"))
}

/// `∇_iR^i_j + ∇_iΘ^i_j − ∇_jR = 0`.
pub fn contracted_bianchi_check(d: &CurvatureDerivative) -> Result<Outcome> {
    let n = d.lower.dim();
    for j in 0..n {
        let mut sum = d.scalar.get(&[j]).neg();
        for i in 0..n {
            sum = sum
                .add(d.ricci_up.get(&[i, i, j]))?
                .add(d.theta_up.get(&[i, i, j]))?;
        }
        if let Some(o) = nonzero("∇_iR^i_j + ∇_iΘ^i_j − ∇_jR", &[j], &sum)? {
            return Ok(o);
        }
    }
    Ok(Outcome::pass(
        "contracted Bianchi identity holds for every j",
    ))
}

/// `R_{lkij} = −R_{lkji}`.
pub fn check_riemann_antisymmetry(riem: &Riemann) -> Result<Outcome> {
    for (idx, s) in riem.lower.entries() {
        let sum = s.add(riem.lower.get(&[idx[0], idx[1], idx[3], idx[2]]))?;
        if let Some(o) = nonzero("R_lkij + R_lkji", &idx, &sum)? {
            return Ok(o);
        }
    }
    Ok(Outcome::pass("R_lkij = −R_lkji"))
}

pub fn check_right_curvature(riem: &Riemann, right: &Tensor) -> Result<Outcome> {
    if let Some((idx, q)) = riem.lower.first_difference(right)? {
        return Ok(Outcome::fail(
            format!("R̃_{} ≠ R_{} at order ħ^{q}", label(&idx), label(&idx)),
            json!({"indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q,
                   "left": riem.lower.get(&idx).coefficient(q)?, "right": right.get(&idx).coefficient(q)?}),
        ));
    }
    Ok(Outcome::pass("right Riemann curvature equals the left one"))
}

fn flipped_relation(
    a: &Tensor,
    b: impl Fn(&[usize]) -> HbarSeries,
    sign: bool,
    what: &str,
) -> Result<Outcome> {
    for (idx, s) in a.entries() {
        let mut rhs = b(&idx).parity_flip();
        if sign {
            rhs = rhs.neg();
        }
        if let Some(q) = s.first_difference(&rhs)? {
            return Ok(Outcome::fail(
                format!("{what} fails at ({}) order ħ^{q}", label(&idx)),
                json!({"indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q,
                       "lhs": s.coefficient(q)?, "rhs": b(&idx).coefficient(q)?}),
            ));
        }
    }
    Ok(Outcome::pass(what.to_string()))
}

/// `R_{lkij}[2q] = −R_{klij}[2q]`, `R_{lkij}[2q+1] = R_{klij}[2q+1]`.
pub fn check_riemann_parity(riem: &Riemann) -> Result<Outcome> {
    let r = &riem.lower;
    flipped_relation(
        r,
        |x| r.get(&[x[1], x[0], x[2], x[3]]).clone(),
        true,
        "R_lkij[2q] = −R_klij[2q], R_lkij[2q+1] = R_klij[2q+1]",
    )
}

/// `R_{ij} = Θ_{ji}` at even orders, `R_{ij} = −Θ_{ji}` at odd orders, and the same for the raised pair.
pub fn check_ricci_relations(b: &RicciBundle) -> Result<Outcome> {
    let lowered = flipped_relation(
        &b.ricci,
        |x| b.theta.get(&[x[1], x[0]]).clone(),
        false,
        "R_ij[2q] = Θ_ji[2q], R_ij[2q+1] = −Θ_ji[2q+1]",
    )?;
    if !lowered.passed {
        return Ok(lowered);
    }
    let raised = flipped_relation(
        &b.ricci_up,
        |x| b.theta_up.get(x).clone(),
        false,
        "R^i_j[2q] = Θ^i_j[2q], R^i_j[2q+1] = −Θ^i_j[2q+1]",
    )?;
    Ok(Outcome::all([lowered, raised]))
}

/// Independent verdicts for the parity hypotheses and each link of the cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub hypotheses: Outcome,
    pub connection_parity: Outcome,
    pub riemann_parity: Outcome,
    pub ricci_equivalence: Outcome,
}

impl EquivalenceReport {
    pub fn all_hold(&self) -> bool {
        self.hypotheses.passed
            && self.connection_parity.passed
            && self.riemann_parity.passed
            && self.ricci_equivalence.passed
    }
}

pub fn ricci_equivalence_check(
    g: &NcMetric,
    chiral: &Chiral,
    conn: &Connection,
    riem: &Riemann,
    bundle: &RicciBundle,
) -> Result<EquivalenceReport> {
    let hypotheses = Outcome::all([check_metric_parity(g)?, check_chiral_parity(chiral)?]);
    Ok(EquivalenceReport {
        hypotheses,
        connection_parity: check_connection_parity(conn)?,
        riemann_parity: check_riemann_parity(riem)?,
        ricci_equivalence: check_ricci_relations(bundle)?,
    })
}
