//! Moyal and general star products on ħ-series.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde_json::json;

use crate::check::Outcome;
use crate::error::{Error, Result};
use crate::random;
use crate::rational::{self, factorial, Rational};
use crate::scalar::{BasePoint, Jet, MultiIndex, Scalar};
use crate::series::HbarSeries;

/// Constant skew-symmetric matrix `θ^{ij}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaMatrix {
    entries: Vec<Vec<Rational>>,
}

impl ThetaMatrix {
    pub fn new(entries: Vec<Vec<Rational>>) -> Result<Self> {
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Validation(format!(
                    "theta row {} has length {}, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if entries[i][j] != -entries[j][i].clone() {
                    return Err(Error::Validation(format!(
                        "theta is not skew-symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(ThetaMatrix { entries })
    }

    pub fn zero(n: usize) -> Self {
        ThetaMatrix {
            entries: vec![vec![Rational::zero(); n]; n],
        }
    }

    /// `θ^{ij} = −θ^{ji} = λ` (0-based indices), all other entries zero.
    pub fn single(n: usize, i: usize, j: usize, lambda: Rational) -> Result<Self> {
        if i >= n || j >= n || i == j {
            return Err(Error::Validation(format!(
                "theta pair ({}, {}) in dimension {n}",
                i + 1,
                j + 1
            )));
        }
        let mut t = Self::zero(n);
        t.entries[j][i] = -lambda.clone();
        t.entries[i][j] = lambda;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    /// `μ_q` as an explicit bidifferential operator.
    ///
    /// Expanding `(θ^{ij}∂_i⊗∂_j)^q / q!` over the nonzero entries gives
    /// `Σ Π_p θ_p^{k_p}/k_p! · ∂^α ⊗ ∂^β` over multisets `k` of size `q`.
    pub fn moyal_operator(&self, q: usize) -> BidiffOperator {
        exponential_operator(&self.entries, q)
    }
}

/// The order-`q` part of `exp(c^{ij}∂_i⊗∂_j)` for any constant matrix `c`.
pub fn exponential_operator(c: &[Vec<Rational>], q: usize) -> BidiffOperator {
    let n = c.len();
    let pairs: Vec<(usize, usize, &Rational)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !c[i][j].is_zero())
        .map(|(i, j)| (i, j, &c[i][j]))
        .collect();
    let mut acc: BTreeMap<(MultiIndex, MultiIndex), Rational> = BTreeMap::new();
    let mut alpha = vec![0; n];
    let mut beta = vec![0; n];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        pairs: &[(usize, usize, &Rational)],
        p: usize,
        left: usize,
        coeff: Rational,
        alpha: &mut Vec<usize>,
        beta: &mut Vec<usize>,
        acc: &mut BTreeMap<(MultiIndex, MultiIndex), Rational>,
    ) {
        if left == 0 {
            *acc.entry((alpha.clone(), beta.clone()))
                .or_insert_with(Rational::zero) += coeff;
            return;
        }
        if p == pairs.len() {
            return;
        }
        let (i, j, t) = pairs[p];
        let mut c = coeff;
        for k in 0..=left {
            if k > 0 {
                c = c * t / Rational::from_integer(k.into());
                alpha[i] += 1;
                beta[j] += 1;
            }
            rec(pairs, p + 1, left - k, c.clone(), alpha, beta, acc);
        }
        alpha[i] -= left;
        beta[j] -= left;
    }
    if q == 0 {
        acc.insert((alpha.clone(), beta.clone()), Rational::one());
    } else {
        rec(
            &pairs,
            0,
            q,
            Rational::one(),
            &mut alpha,
            &mut beta,
            &mut acc,
        );
    }
    BidiffOperator {
        terms: acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((left, right), c)| BidiffTerm {
                coeff: Scalar::Constant(c),
                left,
                right,
            })
            .collect(),
    }
}

/// `c · (∂^left u)(∂^right v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BidiffTerm {
    pub coeff: Scalar,
    pub left: MultiIndex,
    pub right: MultiIndex,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BidiffOperator {
    pub terms: Vec<BidiffTerm>,
}

impl BidiffOperator {
    pub fn apply(&self, u: &Scalar, v: &Scalar) -> Result<Scalar> {
        let mut out = Scalar::zero();
        if u.is_exact_zero() || v.is_exact_zero() {
            return Ok(out);
        }
        for t in &self.terms {
            let du = u.derivative(&t.left)?;
            if du.is_exact_zero() {
                continue;
            }
            let dv = v.derivative(&t.right)?;
            if dv.is_exact_zero() {
                continue;
            }
            out = out.add(&t.coeff.mul(&du)?.mul(&dv)?)?;
        }
        Ok(out)
    }
}

/// Star product given by explicit tables `B_1, …, B_K`; higher orders vanish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralStar {
    dim: usize,
    orders: Vec<BidiffOperator>,
}

impl GeneralStar {
    /// Validates shapes and unitality (`B_q(1, u) = B_q(u, 1) = 0`).
    pub fn new(dim: usize, orders: Vec<BidiffOperator>) -> Result<Self> {
        for (q, op) in orders.iter().enumerate() {
            for t in &op.terms {
                if t.left.len() != dim || t.right.len() != dim {
                    return Err(Error::InvalidStarProduct(format!(
                        "B_{} term has multi-indices of length {}/{}, expected {dim}",
                        q + 1,
                        t.left.len(),
                        t.right.len()
                    )));
                }
                if !t.coeff.is_zero()
                    && (t.left.iter().all(|&a| a == 0) || t.right.iter().all(|&b| b == 0))
                {
                    return Err(Error::InvalidStarProduct(format!(
                        "B_{} term {:?}⊗{:?} does not differentiate both slots, so 1 is not a unit",
                        q + 1,
                        t.left,
                        t.right
                    )));
                }
            }
        }
        Ok(GeneralStar { dim, orders })
    }

    /// `B_q = (c^{ij}∂_i⊗∂_j)^q / q!` for `q ≤ orders`; associative through that order
    /// for any constant `c`, and a Moyal product only when `c` is skew.
    pub fn exponential(c: Vec<Vec<Rational>>, orders: usize) -> Result<Self> {
        let n = c.len();
        if c.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidStarProduct(
                "coefficient matrix is not square".into(),
            ));
        }
        GeneralStar::new(
            n,
            (1..=orders).map(|q| exponential_operator(&c, q)).collect(),
        )
    }

    /// Shape checks only; unitality is not enforced.
    pub fn new_unvalidated(dim: usize, orders: Vec<BidiffOperator>) -> Result<Self> {
        for (q, op) in orders.iter().enumerate() {
            if op
                .terms
                .iter()
                .any(|t| t.left.len() != dim || t.right.len() != dim)
            {
                return Err(Error::InvalidStarProduct(format!(
                    "B_{} has multi-indices of the wrong length",
                    q + 1
                )));
            }
        }
        Ok(GeneralStar { dim, orders })
    }

    pub fn orders(&self) -> &[BidiffOperator] {
        &self.orders
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StarProduct {
    Moyal(ThetaMatrix),
    General(GeneralStar),
}

impl StarProduct {
    pub fn moyal(theta: ThetaMatrix) -> Self {
        StarProduct::Moyal(theta)
    }

    /// The classical pointwise product.
    pub fn pointwise(n: usize) -> Self {
        StarProduct::Moyal(ThetaMatrix::zero(n))
    }

    pub fn dim(&self) -> usize {
        match self {
            StarProduct::Moyal(t) => t.dim(),
            StarProduct::General(g) => g.dim,
        }
    }

    /// `B_q` with `B_0 = 1⊗1`.
    pub fn operator(&self, q: usize) -> BidiffOperator {
        match self {
            StarProduct::Moyal(t) => t.moyal_operator(q),
            StarProduct::General(g) => {
                if q == 0 {
                    ThetaMatrix::zero(g.dim).moyal_operator(0)
                } else {
                    g.orders.get(q - 1).cloned().unwrap_or_default()
                }
            }
        }
    }

    /// `B_q(u, v)`.
    pub fn bidiff(&self, q: usize, u: &Scalar, v: &Scalar) -> Result<Scalar> {
        if q == 0 {
            return u.mul(v);
        }
        self.operator(q).apply(u, v)
    }

    pub fn operators(&self, n: usize) -> Vec<BidiffOperator> {
        (0..=n).map(|q| self.operator(q)).collect()
    }

    /// `(a⋆b)[q] = Σ_{r+s+t=q} B_t(a[r], b[s])`.
    pub fn mul(&self, a: &HbarSeries, b: &HbarSeries) -> Result<HbarSeries> {
        let n = a.truncation();
        if n != b.truncation() {
            return Err(Error::OrderMismatch {
                left: n,
                right: b.truncation(),
            });
        }
        let ops = self.operators(n);
        self.mul_with(&ops, a, b)
    }

    pub(crate) fn mul_with(
        &self,
        ops: &[BidiffOperator],
        a: &HbarSeries,
        b: &HbarSeries,
    ) -> Result<HbarSeries> {
        let n = a.truncation();
        let mut out = HbarSeries::zero(n);
        for q in 0..=n {
            let mut acc = Scalar::zero();
            for r in 0..=q {
                let ar = a.at(r);
                if ar.is_exact_zero() {
                    continue;
                }
                for s in 0..=q - r {
                    let bs = b.at(s);
                    if bs.is_exact_zero() {
                        continue;
                    }
                    let t = q - r - s;
                    let term = if t == 0 {
                        ar.mul(bs)?
                    } else {
                        ops[t].apply(ar, bs)?
                    };
                    acc = acc.add(&term)?;
                }
            }
            out.set(q, acc);
        }
        Ok(out)
    }

    /// Left-to-right product of several series.
    pub fn mul_chain(&self, factors: &[&HbarSeries]) -> Result<HbarSeries> {
        let (first, rest) = factors.split_first().expect("at least one factor");
        let n = first.truncation();
        let ops = self.operators(n);
        let mut acc = (*first).clone();
        for f in rest {
            if f.truncation() != n {
                return Err(Error::OrderMismatch {
                    left: n,
                    right: f.truncation(),
                });
            }
            acc = self.mul_with(&ops, &acc, f)?;
        }
        Ok(acc)
    }

    /// `{u, v} = ½(B_1(u, v) − B_1(v, u))`.
    pub fn poisson_bracket(&self, u: &Scalar, v: &Scalar) -> Result<Scalar> {
        let op = self.operator(1);
        Ok(op
            .apply(u, v)?
            .sub(&op.apply(v, u)?)?
            .scale(&rational::frac(1, 2)))
    }

    /// `[x^i, x^j]_⋆ = 2ħ{x^i, x^j}` for the coordinate functions at `base`; for a
    /// Moyal product the right side is `2ħθ^{ij}`.
    pub fn check_commutators(&self, base: &Arc<BasePoint>, n: usize) -> Result<Outcome> {
        let d = self.dim();
        let coords = (0..d)
            .map(|i| Ok(HbarSeries::constant(n, Scalar::Jet(Jet::coordinate(base.clone(), n + 2, i)?))))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..d {
            for j in 0..d {
                let (a, b) = (&coords[i], &coords[j]);
                let got = self.mul(a, b)?.sub(&self.mul(b, a)?)?;
                let bracket = match self {
                    StarProduct::Moyal(t) => Scalar::Constant(t.get(i, j).clone()),
                    StarProduct::General(_) => self.poisson_bracket(a.at(0), b.at(0))?,
                };
                let want = HbarSeries::monomial(n, 1, bracket.scale(&rational::int(2)));
                if let Some(q) = got.first_difference(&want)? {
                    return Ok(Outcome::fail(
                        format!("[x^{}, x^{}] differs from 2ħ{{x^{}, x^{}}} at ħ^{q}", i + 1, j + 1, i + 1, j + 1),
                        json!({"i": i + 1, "j": j + 1, "order": q, "got": got.coefficient(q)?, "want": want.coefficient(q)?}),
                    ));
                }
            }
        }
        Ok(Outcome::pass(format!("all {} coordinate commutators", d * d)))
    }

    /// Exact check of `∂_i(a⋆b) = ∂_ia⋆b + a⋆∂_ib` for every sample and direction.
    pub fn check_leibniz(&self, samples: &[(HbarSeries, HbarSeries)]) -> Result<Outcome> {
        for (k, (a, b)) in samples.iter().enumerate() {
            let ab = self.mul(a, b)?;
            for i in 0..self.dim() {
                let lhs = ab.partial(i)?;
                let rhs = self
                    .mul(&a.partial(i)?, b)?
                    .add(&self.mul(a, &b.partial(i)?)?)?;
                if let Some(q) = lhs.first_difference(&rhs)? {
                    return Ok(Outcome::fail(
                        format!(
                            "Leibniz rule fails for sample {k} in direction {} at order ħ^{q}",
                            i + 1
                        ),
                        json!({"sample": k, "direction": i + 1, "order": q,
                               "lhs": lhs.coefficient(q)?, "rhs": rhs.coefficient(q)?}),
                    ));
                }
            }
        }
        Ok(Outcome::pass(format!(
            "{} samples, {} directions",
            samples.len(),
            self.dim()
        )))
    }

    /// Exact check of `(a⋆b)⋆c = a⋆(b⋆c)` through the series truncation.
    pub fn check_associativity(
        &self,
        samples: &[(HbarSeries, HbarSeries, HbarSeries)],
    ) -> Result<Outcome> {
        let mut first: Option<(usize, usize)> = None;
        for (k, (a, b, c)) in samples.iter().enumerate() {
            let lhs = self.mul(&self.mul(a, b)?, c)?;
            let rhs = self.mul(a, &self.mul(b, c)?)?;
            if let Some(q) = lhs.first_difference(&rhs)? {
                if first.is_none_or(|(_, fq)| q < fq) {
                    first = Some((k, q));
                }
            }
        }
        Ok(match first {
            None => Outcome::pass(format!("{} triples", samples.len())),
            Some((k, q)) => Outcome::fail(
                format!("associativity fails at order ħ^{q} (triple {k})"),
                json!({"triple": k, "order": q}),
            ),
        })
    }

    /// Associativity on seeded random jets plus the coordinate functions.
    ///
    /// The base point is the origin unless one is given.
    pub fn validate_associativity(
        &self,
        base: Option<Arc<BasePoint>>,
        n: usize,
        jet_order: usize,
        seed: u64,
        trials: usize,
    ) -> Result<Outcome> {
        let base = base.unwrap_or_else(|| Arc::new(BasePoint::origin(self.dim())));
        let mut rng = random::rng(seed);
        let mut pool: Vec<HbarSeries> = Vec::new();
        for i in 0..self.dim() {
            if let Ok(x) = Jet::coordinate(base.clone(), jet_order, i) {
                pool.push(HbarSeries::constant(n, Scalar::Jet(x)));
            }
        }
        let mut triples = Vec::new();
        for _ in 0..trials {
            let pick = |rng: &mut random::SeededRng| {
                if !pool.is_empty() && rand::Rng::gen_bool(rng, 0.2) {
                    pool[rand::Rng::gen_range(rng, 0..pool.len())].clone()
                } else {
                    random::series(rng, &base, n, jet_order)
                }
            };
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            let c = pick(&mut rng);
            triples.push((a, b, c));
        }
        self.check_associativity(&triples)
    }
}

/// `μ_q(u, v)` by the literal sum over all index tuples `(i_1…i_q, j_1…j_q)`.
///
/// Exponential in `q`; kept as an independent reference for the grouped form.
pub fn mu_literal(theta: &ThetaMatrix, q: usize, u: &Scalar, v: &Scalar) -> Result<Scalar> {
    let n = theta.dim();
    let mut total = Scalar::zero();
    let count = n.pow(2 * q as u32);
    for code in 0..count {
        let mut c = code;
        let mut alpha = vec![0; n];
        let mut beta = vec![0; n];
        let mut coeff = Rational::one();
        for _ in 0..q {
            let i = c % n;
            c /= n;
            let j = c % n;
            c /= n;
            coeff *= theta.get(i, j);
            alpha[i] += 1;
            beta[j] += 1;
        }
        if coeff.is_zero() {
            continue;
        }
        let term = u.derivative(&alpha)?.mul(&v.derivative(&beta)?)?;
        total = total.add(&term.scale(&coeff))?;
    }
    Ok(total.scale(&(Rational::one() / Rational::from_integer(factorial(q)))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn theta2(l: i64) -> ThetaMatrix {
        ThetaMatrix::single(2, 0, 1, int(l)).unwrap()
    }

    #[test]
    fn theta_validation() {
        assert!(ThetaMatrix::new(vec![vec![int(1), int(0)], vec![int(0), int(0)]]).is_err());
        assert!(ThetaMatrix::new(vec![vec![int(0), int(2)], vec![int(-2), int(0)]]).is_ok());
    }

    #[test]
    fn coordinate_mu1() {
        let base = Arc::new(BasePoint::origin(2));
        let x1 = Scalar::Jet(Jet::coordinate(base.clone(), 3, 0).unwrap());
        let x2 = Scalar::Jet(Jet::coordinate(base, 3, 1).unwrap());
        let m = StarProduct::moyal(theta2(5));
        assert_eq!(m.bidiff(1, &x1, &x2).unwrap().value(), &int(5));
        assert_eq!(m.poisson_bracket(&x1, &x2).unwrap().value(), &int(5));
    }

    #[test]
    fn grouped_matches_literal() {
        let mut rng = random::rng(7);
        let base = Arc::new(BasePoint::origin(3));
        let theta = ThetaMatrix::new(vec![
            vec![int(0), int(1), rational::frac(1, 2)],
            vec![int(-1), int(0), int(2)],
            vec![rational::frac(-1, 2), int(-2), int(0)],
        ])
        .unwrap();
        for q in 0..=3 {
            let u = Scalar::Jet(random::jet(&mut rng, &base, 4));
            let v = Scalar::Jet(random::jet(&mut rng, &base, 4));
            let grouped = theta.moyal_operator(q).apply(&u, &v).unwrap();
            assert_eq!(grouped, mu_literal(&theta, q, &u, &v).unwrap(), "q = {q}");
        }
    }

    #[test]
    fn budget_exhaustion() {
        let base = Arc::new(BasePoint::origin(2));
        let x = Scalar::Jet(Jet::coordinate(base, 1, 0).unwrap());
        let m = StarProduct::moyal(theta2(1));
        assert!(matches!(
            m.bidiff(2, &x, &x),
            Err(Error::BudgetExhausted(_))
        ));
    }

    #[test]
    fn unitality_is_validated() {
        let bad = BidiffOperator {
            terms: vec![BidiffTerm {
                coeff: Scalar::one(),
                left: vec![0, 0],
                right: vec![1, 0],
            }],
        };
        assert!(matches!(
            GeneralStar::new(2, vec![bad]),
            Err(Error::InvalidStarProduct(_))
        ));
    }

    fn samples(seed: u64, n: usize, count: usize) -> Vec<(HbarSeries, HbarSeries)> {
        let mut rng = random::rng(seed);
        let base = Arc::new(random::rational_point(&mut rng, n));
        (0..count)
            .map(|_| {
                (
                    random::series(&mut rng, &base, 3, 7),
                    random::series(&mut rng, &base, 3, 7),
                )
            })
            .collect()
    }

    #[test]
    fn moyal_satisfies_leibniz() {
        let m = StarProduct::moyal(theta2(2));
        assert!(m.check_leibniz(&samples(3, 2, 5)).unwrap().passed);
    }

    #[test]
    fn constant_coefficient_operator_satisfies_leibniz() {
        // B_1(u, v) = u·∂_1v
        let op = BidiffOperator {
            terms: vec![BidiffTerm {
                coeff: Scalar::one(),
                left: vec![0, 0],
                right: vec![1, 0],
            }],
        };
        let s = StarProduct::General(GeneralStar::new_unvalidated(2, vec![op]).unwrap());
        assert!(s.check_leibniz(&samples(4, 2, 3)).unwrap().passed);
    }

    #[test]
    fn jet_coefficient_operator_breaks_leibniz() {
        // B_1(u, v) = x¹·∂_1u·∂_2v
        let base = Arc::new(BasePoint::rational(&[int(1), int(2)]));
        let x1 = Scalar::Jet(Jet::coordinate(base.clone(), 8, 0).unwrap());
        let op = BidiffOperator {
            terms: vec![BidiffTerm {
                coeff: x1.clone(),
                left: vec![1, 0],
                right: vec![0, 1],
            }],
        };
        let s = StarProduct::General(GeneralStar::new(2, vec![op]).unwrap());
        let x2 = Scalar::Jet(Jet::coordinate(base, 8, 1).unwrap());
        // ∂_1(x¹ ⋆ x²) picks up ħ from ∂_1 of the coefficient.
        let pair = (HbarSeries::constant(2, x1), HbarSeries::constant(2, x2));
        let out = s.check_leibniz(&[pair]).unwrap();
        assert!(!out.passed);
        assert_eq!(out.counterexample.unwrap()["order"], 1);
    }

    #[test]
    fn perturbed_second_order_is_not_associative() {
        let theta = theta2(1);
        let mut b2 = theta.moyal_operator(2);
        b2.terms.push(BidiffTerm {
            coeff: Scalar::one(),
            left: vec![1, 0],
            right: vec![1, 0],
        });
        let s =
            StarProduct::General(GeneralStar::new(2, vec![theta.moyal_operator(1), b2]).unwrap());
        // a = (x¹)², b = x¹, c = x²: the defect at ħ³ is 2θ¹².
        let base = Arc::new(BasePoint::origin(2));
        let x1 = Jet::coordinate(base.clone(), 8, 0).unwrap();
        let x2 = Jet::coordinate(base, 8, 1).unwrap();
        let lift = |j: Jet| HbarSeries::constant(4, Scalar::Jet(j));
        let a = lift(x1.mul(&x1).unwrap());
        let out = s.check_associativity(&[(a, lift(x1), lift(x2))]).unwrap();
        assert!(!out.passed);
        assert_eq!(out.counterexample.unwrap()["order"], 3);
        assert!(!s.validate_associativity(None, 4, 10, 11, 4).unwrap().passed);
        assert!(
            StarProduct::moyal(theta)
                .validate_associativity(None, 4, 10, 11, 4)
                .unwrap()
                .passed
        );
    }
}
