//! Noncommutative metrics and their two-sided star-inverse.

use num_traits::Zero;
use rayon::prelude::*;
use serde_json::json;

use crate::check::Outcome;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::scalar::Scalar;
use crate::series::HbarSeries;
use crate::star::{BidiffOperator, StarProduct};
use crate::tensor::{label, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct NcMetric {
    g: Tensor,
    star: StarProduct,
}

/// Entries `g^{ij}`, simultaneously a left and a right star-inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseMetric {
    ginv: Tensor,
}

impl InverseMetric {
    pub fn tensor(&self) -> &Tensor {
        &self.ginv
    }

    pub fn get(&self, i: usize, j: usize) -> &HbarSeries {
        self.ginv.get(&[i, j])
    }
}

impl NcMetric {
    pub fn new(g: Tensor, star: StarProduct) -> Result<Self> {
        if g.rank() != 2 {
            return Err(Error::ShapeMismatch(format!("metric of rank {}", g.rank())));
        }
        if g.dim() != star.dim() {
            return Err(Error::ShapeMismatch(format!(
                "metric in dimension {} with a star product in dimension {}",
                g.dim(),
                star.dim()
            )));
        }
        Ok(NcMetric { g, star })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn truncation(&self) -> usize {
        self.g.truncation()
    }

    pub fn tensor(&self) -> &Tensor {
        &self.g
    }

    pub fn star(&self) -> &StarProduct {
        &self.star
    }

    pub fn get(&self, i: usize, j: usize) -> &HbarSeries {
        self.g.get(&[i, j])
    }

    /// Base-point values of `g_{ij}[0]`.
    pub fn leading_values(&self) -> Vec<Vec<Rational>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.get(i, j).at(0).value().clone())
                    .collect()
            })
            .collect()
    }

    /// Whether `det g_{ij}[0]` is nonzero at the base point.
    pub fn check_invertible(&self) -> bool {
        !rational::determinant(&self.leading_values()).is_zero()
    }

    /// Two-sided inverse: built by the right recursion, confirmed by the left
    /// recursion and by both defining products.
    pub fn star_inverse(&self) -> Result<InverseMetric> {
        let n = self.dim();
        let order = self.truncation();
        let leading: Vec<Vec<Scalar>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).at(0).clone()).collect())
            .collect();
        let g0inv = pointwise_inverse(&leading)?;
        let ops = self.star.operators(order);

        let right = self.recursion(&g0inv, &ops, Side::Right)?;
        let left = self.recursion(&g0inv, &ops, Side::Left)?;
        if let Some((idx, q)) = right.first_difference(&left)? {
            return Err(Error::InternalDisagreement(format!(
                "left and right inverse recursions differ at g^{{{}}}[{q}]",
                label(&idx)
            )));
        }
        let inv = InverseMetric { ginv: right };
        let delta = identity(n, order);
        let gl = self.contract(&self.g, &inv.ginv)?;
        let lg = self.contract(&inv.ginv, &self.g)?;
        for (name, prod) in [("g⋆g⁻¹", gl), ("g⁻¹⋆g", lg)] {
            if let Some((idx, q)) = prod.first_difference(&delta)? {
                return Err(Error::InternalDisagreement(format!(
                    "{name} differs from δ at ({}) order {q}",
                    label(&idx)
                )));
            }
        }
        Ok(inv)
    }

    /// Matrix star product `(a⋆b)_{ij} = Σ_k a_{ik}⋆b_{kj}`.
    pub fn contract(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        matrix_star(&self.star, a, b)
    }

    fn recursion(
        &self,
        g0inv: &[Vec<Scalar>],
        ops: &[BidiffOperator],
        side: Side,
    ) -> Result<Tensor> {
        let n = self.dim();
        let order = self.truncation();
        let mut coeffs: Vec<Vec<Vec<Scalar>>> = vec![g0inv.to_vec()];
        let g = |i: usize, j: usize, q: usize| self.get(i, j).at(q);
        for q in 1..=order {
            // Everything of ħ-order q in g⋆h (or h⋆g) except the g[0]·h[q] term.
            let rest: Vec<Scalar> = (0..n * n)
                .into_par_iter()
                .map(|code| {
                    let (a, b) = (code / n, code % n);
                    let mut acc = Scalar::zero();
                    for m in 0..n {
                        for t in 0..=q {
                            for s in 0..=q - t {
                                let u = q - t - s;
                                if u == q {
                                    continue;
                                }
                                let (x, y) = match side {
                                    Side::Right => (g(a, m, s), &coeffs[u][m][b]),
                                    Side::Left => (&coeffs[u][a][m], g(m, b, s)),
                                };
                                if x.is_exact_zero() || y.is_exact_zero() {
                                    continue;
                                }
                                let term = if t == 0 {
                                    x.mul(y)?
                                } else {
                                    ops[t].apply(x, y)?
                                };
                                acc = acc.add(&term)?;
                            }
                        }
                    }
                    Ok(acc)
                })
                .collect::<Result<_>>()?;
            let next: Vec<Vec<Scalar>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let mut acc = Scalar::zero();
                            for k in 0..n {
                                let term = match side {
                                    Side::Right => g0inv[i][k].mul(&rest[k * n + j])?,
                                    Side::Left => rest[i * n + k].mul(&g0inv[k][j])?,
                                };
                                acc = acc.add(&term)?;
                            }
                            Ok(acc.neg())
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            coeffs.push(next);
        }
        Tensor::try_from_fn(n, 2, |idx| {
            Ok(HbarSeries::from_coeffs(
                order,
                (0..=order).map(|q| coeffs[q][idx[0]][idx[1]].clone()),
            ))
        })
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

pub fn identity(n: usize, order: usize) -> Tensor {
    let mut t = Tensor::zeros(n, 2, order);
    for i in 0..n {
        t.set(&[i, i], HbarSeries::one(order));
    }
    t
}

/// `(a⋆b)_{ij} = Σ_k a_{ik}⋆b_{kj}`.
pub fn matrix_star(star: &StarProduct, a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let n = a.dim();
    Tensor::try_from_fn(n, 2, |idx| {
        let mut acc = HbarSeries::zero(a.truncation());
        for k in 0..n {
            acc = acc.add(&star.mul(a.get(&[idx[0], k]), b.get(&[k, idx[1]]))?)?;
        }
        Ok(acc)
    })
}

/// Gauss–Jordan inverse of a matrix of scalars, pivoting on nonzero base values.
pub fn pointwise_inverse(m: &[Vec<Scalar>]) -> Result<Vec<Vec<Scalar>>> {
    let n = m.len();
    let mut a: Vec<Vec<Scalar>> = m.to_vec();
    let mut inv: Vec<Vec<Scalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Scalar::one()
                    } else {
                        Scalar::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].value().is_zero())
            .ok_or_else(|| {
                Error::NotInvertible("g_{ij}[0] is singular at the base point".into())
            })?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].reciprocal()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&p)?;
            inv[col][j] = inv[col][j].mul(&p)?;
        }
        for r in 0..n {
            if r == col || a[r][col].is_exact_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].sub(&f.mul(&a[col][j])?)?;
                inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j])?)?;
            }
        }
    }
    Ok(inv)
}

/// `m_{ij}[2q] = m_{ji}[2q]` and `m_{ij}[2q+1] = −m_{ji}[2q+1]`.
pub fn check_transpose_parity(m: &Tensor, name: &str) -> Result<Outcome> {
    let n = m.dim();
    for i in 0..n {
        for j in i..n {
            let a = m.get(&[i, j]);
            let b = m.get(&[j, i]).parity_flip();
            if let Some(q) = a.first_difference(&b)? {
                return Ok(Outcome::fail(
                    format!(
                        "{name}_{}{} and {name}_{}{} violate the transpose parity at order ħ^{q}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    ),
                    json!({"i": i + 1, "j": j + 1, "order": q,
                           "ij": m.get(&[i, j]).coefficient(q)?, "ji": m.get(&[j, i]).coefficient(q)?}),
                ));
            }
        }
    }
    Ok(Outcome::pass(format!(
        "{name}: even orders symmetric, odd orders antisymmetric"
    )))
}

pub fn check_metric_parity(g: &NcMetric) -> Result<Outcome> {
    check_transpose_parity(&g.g, "g")
}

pub fn check_inverse_parity(ginv: &InverseMetric) -> Result<Outcome> {
    check_transpose_parity(&ginv.ginv, "g^")
}
