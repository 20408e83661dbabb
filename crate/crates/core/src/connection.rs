//! Canonical connection determined by a metric and chiral coefficients.

use serde_json::json;

use crate::check::Outcome;
use crate::error::{Error, Result};
use crate::metric::{InverseMetric, NcMetric};
use crate::rational::frac;
use crate::series::HbarSeries;
use crate::star::StarProduct;
use crate::tensor::{label, Tensor};

/// `Υ_{ijk}`, symmetric in the first two indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Chiral(Tensor);

impl Chiral {
    pub fn new(t: Tensor) -> Result<Self> {
        if t.rank() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "chiral coefficients of rank {}",
                t.rank()
            )));
        }
        let n = t.dim();
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    if t.get(&[i, j, k]) != t.get(&[j, i, k]) {
                        return Err(Error::AsymmetricChiral(i + 1, j + 1, k + 1));
                    }
                }
            }
        }
        Ok(Chiral(t))
    }

    pub fn zero(n: usize, order: usize) -> Self {
        Chiral(Tensor::zeros(n, 3, order))
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &HbarSeries {
        self.0.get(&[i, j, k])
    }
}

/// Lowered and raised coefficients of a left/right connection pair.
///
/// Raised arrays store `Γ^k_{ij}` at index `[i, j, k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub lower: Tensor,
    pub lower_right: Tensor,
    pub upper: Tensor,
    pub upper_right: Tensor,
}

impl Connection {
    /// Raises `Γ_{ijk}` and `Γ̃_{ijk}`: `Γ^l_{ij} = Γ_{ijm}⋆g^{ml}`, `Γ̃^m_{ij} = g^{mk}⋆Γ̃_{ijk}`.
    pub fn from_lowered(
        star: &StarProduct,
        ginv: &InverseMetric,
        lower: Tensor,
        lower_right: Tensor,
    ) -> Result<Self> {
        let n = lower.dim();
        let upper = Tensor::try_from_fn(n, 3, |idx| {
            let (i, j, l) = (idx[0], idx[1], idx[2]);
            sum_star(
                star,
                (0..n).map(|m| (lower.get(&[i, j, m]), ginv.get(m, l))),
            )
        })?;
        let upper_right = Tensor::try_from_fn(n, 3, |idx| {
            let (i, j, m) = (idx[0], idx[1], idx[2]);
            sum_star(
                star,
                (0..n).map(|k| (ginv.get(m, k), lower_right.get(&[i, j, k]))),
            )
        })?;
        Ok(Connection {
            lower,
            lower_right,
            upper,
            upper_right,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    /// `Γ^k_{ij}`.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &HbarSeries {
        self.upper.get(&[i, j, k])
    }

    /// `Γ̃^k_{ij}`.
    pub fn gamma_right(&self, k: usize, i: usize, j: usize) -> &HbarSeries {
        self.upper_right.get(&[i, j, k])
    }
}

/// `Σ a⋆b` over the given pairs.
pub fn sum_star<'a>(
    star: &StarProduct,
    pairs: impl Iterator<Item = (&'a HbarSeries, &'a HbarSeries)>,
) -> Result<HbarSeries> {
    let mut acc: Option<HbarSeries> = None;
    for (a, b) in pairs {
        let p = star.mul(a, b)?;
        acc = Some(match acc {
            None => p,
            Some(s) => s.add(&p)?,
        });
    }
    acc.ok_or_else(|| Error::ShapeMismatch("empty contraction".into()))
}

/// `Γ_{ijk} = ½(∂_ig_{jk} + ∂_jg_{ki} − ∂_kg_{ji} ± Υ_{ijk})`, raised through the inverse.
pub fn canonical_connection(
    g: &NcMetric,
    ginv: &InverseMetric,
    chiral: &Chiral,
) -> Result<Connection> {
    let n = g.dim();
    if chiral.tensor().dim() != n {
        return Err(Error::ShapeMismatch(format!(
            "chiral coefficients in dimension {} for a metric in dimension {n}",
            chiral.tensor().dim()
        )));
    }
    let half = frac(1, 2);
    let mut dg = Vec::with_capacity(n);
    for k in 0..n {
        dg.push(g.tensor().map(|_, s| s.partial(k))?);
    }
    let base = |i: usize, j: usize, k: usize| -> Result<HbarSeries> {
        dg[i]
            .get(&[j, k])
            .add(dg[j].get(&[k, i]))?
            .sub(dg[k].get(&[j, i]))
    };
    let lower = Tensor::try_from_fn(n, 3, |x| {
        Ok(base(x[0], x[1], x[2])?
            .add(chiral.get(x[0], x[1], x[2]))?
            .scale(&half))
    })?;
    let lower_right = Tensor::try_from_fn(n, 3, |x| {
        Ok(base(x[0], x[1], x[2])?
            .sub(chiral.get(x[0], x[1], x[2]))?
            .scale(&half))
    })?;
    Connection::from_lowered(g.star(), ginv, lower, lower_right)
}

fn mismatch(
    what: &str,
    idx: &[usize],
    q: usize,
    lhs: &HbarSeries,
    rhs: &HbarSeries,
) -> Result<Outcome> {
    Ok(Outcome::fail(
        format!("{what} fails at ({}) order ħ^{q}", label(idx)),
        json!({"indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q,
               "lhs": lhs.coefficient(q)?, "rhs": rhs.coefficient(q)?}),
    ))
}

/// `∂_kg_{ij} = Γ_{kij} + Γ̃_{kji}`.
pub fn check_compatibility(g: &NcMetric, conn: &Connection) -> Result<Outcome> {
    let n = g.dim();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let lhs = g.get(i, j).partial(k)?;
                let rhs = conn
                    .lower
                    .get(&[k, i, j])
                    .add(conn.lower_right.get(&[k, j, i]))?;
                if let Some(q) = lhs.first_difference(&rhs)? {
                    return mismatch(
                        "compatibility ∂_k g_ij = Γ_kij + Γ̃_kji",
                        &[k, i, j],
                        q,
                        &lhs,
                        &rhs,
                    );
                }
            }
        }
    }
    Ok(Outcome::pass("∂_k g_ij = Γ_kij + Γ̃_kji for all k, i, j"))
}

/// Chirality `Γ − Γ̃ = Υ` and symmetry in the first two indices of all four arrays.
pub fn check_chirality_and_torsion(conn: &Connection, chiral: &Chiral) -> Result<Outcome> {
    let n = conn.dim();
    for (idx, l) in conn.lower.entries() {
        let lhs = l.sub(conn.lower_right.get(&idx))?;
        let rhs = chiral.tensor().get(&idx);
        if let Some(q) = lhs.first_difference(rhs)? {
            return mismatch("chirality Γ_ijk − Γ̃_ijk = Υ_ijk", &idx, q, &lhs, rhs);
        }
    }
    for (name, t) in [
        ("Γ_ijk", &conn.lower),
        ("Γ̃_ijk", &conn.lower_right),
        ("Γ^k_ij", &conn.upper),
        ("Γ̃^k_ij", &conn.upper_right),
    ] {
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let a = t.get(&[i, j, k]);
                    let b = t.get(&[j, i, k]);
                    if let Some(q) = a.first_difference(b)? {
                        return mismatch(
                            &format!("torsion-free symmetry of {name}"),
                            &[i, j, k],
                            q,
                            a,
                            b,
                        );
                    }
                }
            }
        }
    }
    Ok(Outcome::pass(
        "Γ − Γ̃ = Υ; all coefficient arrays symmetric in (i, j)",
    ))
}

/// `∇_kg = 0` and `∇_kg⁻¹ = 0` in components.
pub fn check_metric_parallel(
    g: &NcMetric,
    ginv: &InverseMetric,
    conn: &Connection,
) -> Result<Outcome> {
    let n = g.dim();
    let star = g.star();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let lower = g
                    .get(i, j)
                    .partial(k)?
                    .sub(conn.lower.get(&[k, i, j]))?
                    .sub(conn.lower_right.get(&[k, j, i]))?;
                if let Some(q) = lower.first_difference(&HbarSeries::zero(lower.truncation()))? {
                    return mismatch(
                        "∇_k g = 0",
                        &[k, i, j],
                        q,
                        &lower,
                        &HbarSeries::zero(lower.truncation()),
                    );
                }
                let upper = ginv
                    .get(i, j)
                    .partial(k)?
                    .add(&sum_star(
                        star,
                        (0..n).map(|l| (ginv.get(i, l), conn.gamma(j, k, l))),
                    )?)?
                    .add(&sum_star(
                        star,
                        (0..n).map(|l| (conn.gamma_right(i, k, l), ginv.get(l, j))),
                    )?)?;
                let zero = HbarSeries::zero(upper.truncation());
                if let Some(q) = upper.first_difference(&zero)? {
                    return mismatch("∇_k g⁻¹ = 0", &[k, i, j], q, &upper, &zero);
                }
            }
        }
    }
    Ok(Outcome::pass("∇_k g = ∇_k g⁻¹ = 0"))
}

/// Lowering the raised coefficients recovers `Γ_{ijk}` and `Γ̃_{ijk}`.
pub fn check_raise_lower(g: &NcMetric, conn: &Connection) -> Result<Outcome> {
    let n = g.dim();
    let star = g.star();
    for (idx, l) in conn.lower.entries() {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let back = sum_star(star, (0..n).map(|m| (conn.gamma(m, i, j), g.get(m, k))))?;
        if let Some(q) = back.first_difference(l)? {
            return mismatch("Γ^l_ij ⋆ g_lk = Γ_ijk", &idx, q, &back, l);
        }
        let back = sum_star(
            star,
            (0..n).map(|m| (g.get(k, m), conn.gamma_right(m, i, j))),
        )?;
        let r = conn.lower_right.get(&idx);
        if let Some(q) = back.first_difference(r)? {
            return mismatch("g_kl ⋆ Γ̃^l_ij = Γ̃_ijk", &idx, q, &back, r);
        }
    }
    Ok(Outcome::pass("raised coefficients lower back exactly"))
}

/// `Υ_{ijk}[2q] = 0`.
pub fn check_chiral_parity(chiral: &Chiral) -> Result<Outcome> {
    for (idx, s) in chiral.tensor().entries() {
        let (even, _) = s.parity_split();
        if !even.is_zero() {
            let q = (0..=s.truncation())
                .step_by(2)
                .find(|&q| !s.at(q).is_zero())
                .unwrap_or(0);
            return Ok(Outcome::fail(
                format!("Υ_{} has a nonzero even coefficient at ħ^{q}", label(&idx)),
                json!({"indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q,
                       "value": s.coefficient(q)?}),
            ));
        }
    }
    Ok(Outcome::pass("Υ has no even-order part"))
}

/// `Γ_{ijk}[2q] = Γ̃_{ijk}[2q]` and `Γ_{ijk}[2q+1] = −Γ̃_{ijk}[2q+1]`.
pub fn check_connection_parity(conn: &Connection) -> Result<Outcome> {
    for (idx, l) in conn.lower.entries() {
        let r = conn.lower_right.get(&idx).parity_flip();
        if let Some(q) = l.first_difference(&r)? {
            return mismatch(
                "left/right connection parity",
                &idx,
                q,
                l,
                conn.lower_right.get(&idx),
            );
        }
    }
    Ok(Outcome::pass("Γ[2q] = Γ̃[2q], Γ[2q+1] = −Γ̃[2q+1]"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::star::ThetaMatrix;

    #[test]
    fn constant_metric_is_flat() {
        let mut t = Tensor::zeros(2, 2, 3);
        t.set(&[0, 0], HbarSeries::from_ints(3, &[2]));
        t.set(&[1, 1], HbarSeries::from_ints(3, &[3]));
        let g = NcMetric::new(
            t,
            StarProduct::moyal(ThetaMatrix::single(2, 0, 1, int(1)).unwrap()),
        )
        .unwrap();
        let inv = g.star_inverse().unwrap();
        let conn = canonical_connection(&g, &inv, &Chiral::zero(2, 3)).unwrap();
        assert!(conn.lower.is_zero() && conn.upper.is_zero() && conn.upper_right.is_zero());
    }

    #[test]
    fn asymmetric_chiral_rejected() {
        let mut t = Tensor::zeros(2, 3, 1);
        t.set(&[0, 1, 0], HbarSeries::from_ints(1, &[0, 1]));
        assert!(matches!(
            Chiral::new(t),
            Err(Error::AsymmetricChiral(1, 2, 1))
        ));
    }
}
