//! Moyal products of products of sines and cosines in two angles, against
//! their closed forms in `cosh(λħ)` and `sinh(λħ)`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::check::Outcome;
use crate::embedding::{closed_form_oracle, ClosedForm, Factor, OracleContext};
use crate::error::Result;
use crate::random;
use crate::rational::{self, int, Rational};
use crate::scalar::{jet_of_elementary, AffineArg, Anchor, BasePoint, Elementary, Scalar};
use crate::series::HbarSeries;
use crate::star::{StarProduct, ThetaMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trig {
    Sin,
    Cos,
}

/// `f(θ₁)·g(θ₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrigMonomial(pub Trig, pub Trig);

impl TrigMonomial {
    pub fn name(&self) -> String {
        let f = |t: Trig, i: usize| match t {
            Trig::Sin => format!("sinθ{i}"),
            Trig::Cos => format!("cosθ{i}"),
        };
        format!("{}{}", f(self.0, 1), f(self.1, 2))
    }

    pub fn jet(&self, base: &Arc<BasePoint>, order: usize) -> Result<Scalar> {
        let one = |t: Trig, i: usize| -> Result<Scalar> {
            let kind = match t {
                Trig::Sin => Elementary::Sin,
                Trig::Cos => Elementary::Cos,
            };
            Ok(Scalar::Jet(jet_of_elementary(&kind, &AffineArg::coordinate(2, i), base.clone(), order)?))
        };
        one(self.0, 0)?.mul(&one(self.1, 1)?)
    }
}

/// `left * right = closed_form`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigIdentity {
    pub id: String,
    pub left: TrigMonomial,
    pub right: TrigMonomial,
    pub closed_form: ClosedForm,
}

const S1: Factor = Factor::Sin(0);
const C1: Factor = Factor::Cos(0);
const S2: Factor = Factor::Sin(1);
const C2: Factor = Factor::Cos(1);
const CH: Factor = Factor::Cosh;
const SH: Factor = Factor::Sinh;

fn t(c: i64, f: &[Factor]) -> ClosedForm {
    ClosedForm::term(int(c), f.to_vec())
}

/// `a·b·(x² + sinh²) + s·p·q·cosh·sinh`.
fn mixed(a: Factor, b: Factor, x: Factor, s: i64, p: Factor, q: Factor) -> ClosedForm {
    t(1, &[a.clone(), b.clone(), x.clone(), x]).plus(t(1, &[a, b, SH, SH])).plus(t(s, &[p, q, CH, SH]))
}

/// `s₁c₁s₂c₂ + (x² − y²)·cosh·sinh`.
fn cross(x: Factor, y: Factor) -> ClosedForm {
    t(1, &[S1, C1, S2, C2]).plus(t(1, &[x.clone(), x, CH, SH])).plus(t(-1, &[y.clone(), y, CH, SH]))
}

/// `a²b²cosh² − c²d²sinh²`.
fn square(a: Factor, b: Factor, c: Factor, d: Factor) -> ClosedForm {
    t(1, &[a.clone(), a, b.clone(), b, CH, CH]).plus(t(-1, &[c.clone(), c, d.clone(), d, SH, SH]))
}

/// The sixteen products in four blocks of four.
pub fn appendix_identities() -> Vec<TrigIdentity> {
    use Trig::{Cos as C, Sin as S};
    let ss = TrigMonomial(S, S);
    let sc = TrigMonomial(S, C);
    let cs = TrigMonomial(C, S);
    let cc = TrigMonomial(C, C);
    let table = vec![
        (ss, ss, square(S1, S2, C1, C2)),
        (ss, sc, mixed(S2, C2, S1, -1, S1, C1)),
        (ss, cs, mixed(S1, C1, S2, 1, S2, C2)),
        (ss, cc, cross(S1, S2)),
        (sc, ss, mixed(S2, C2, S1, 1, S1, C1)),
        (sc, sc, square(S1, C2, C1, S2)),
        (sc, cs, cross(C1, S2)),
        (sc, cc, mixed(S1, C1, C2, -1, S2, C2)),
        (cs, ss, mixed(S1, C1, S2, -1, S2, C2)),
        (cs, sc, cross(S1, C2)),
        (cs, cs, square(C1, S2, S1, C2)),
        (cs, cc, mixed(S2, C2, C1, 1, S1, C1)),
        (cc, ss, cross(C1, C2)),
        (cc, sc, mixed(S1, C1, C2, 1, S2, C2)),
        (cc, cs, mixed(S2, C2, C1, -1, S1, C1)),
        (cc, cc, square(C1, C2, S1, S2)),
    ];
    table
        .into_iter()
        .map(|(left, right, closed_form)| TrigIdentity {
            id: format!("{} * {}", left.name(), right.name()),
            left,
            right,
            closed_form,
        })
        .collect()
}

/// One sample point: angles `2·atan(t₁)`, `2·atan(t₂)` and a value of `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoint {
    pub tan_half: [Rational; 2],
    pub lambda: Rational,
}

impl TrigPoint {
    pub fn base(&self) -> Arc<BasePoint> {
        Arc::new(BasePoint::new(self.tan_half.iter().map(Anchor::angle_from_tan_half).collect()))
    }
}

pub fn random_points(count: usize, seed: u64) -> Vec<TrigPoint> {
    let mut rng = random::rng(seed);
    (0..count)
        .map(|_| {
            let mut t = || rational::frac(rng.gen_range(-9..=9), rng.gen_range(1..=7));
            let tan_half = [t(), t()];
            let lambda = random::nonzero_rational(&mut rng);
            TrigPoint { tan_half, lambda }
        })
        .collect()
}

/// `left ⋆ right` and the expanded closed form, both through `ħ^n`.
pub fn evaluate(identity: &TrigIdentity, point: &TrigPoint, n: usize) -> Result<(HbarSeries, HbarSeries)> {
    let base = point.base();
    let star = StarProduct::moyal(ThetaMatrix::single(2, 0, 1, point.lambda.clone())?);
    let u = HbarSeries::constant(n, identity.left.jet(&base, n)?);
    let v = HbarSeries::constant(n, identity.right.jet(&base, n)?);
    let product = star.mul(&u, &v)?;
    let ctx = OracleContext { base, lambda: point.lambda.clone(), profile: Vec::new() };
    let expected = closed_form_oracle(&identity.closed_form, &ctx, n)?;
    Ok((product, expected))
}

/// Checks every identity at every point; one outcome per identity.
pub fn verify(identities: &[TrigIdentity], points: &[TrigPoint], n: usize) -> Result<Vec<(String, Outcome)>> {
    identities
        .iter()
        .map(|id| {
            for (p, point) in points.iter().enumerate() {
                let (got, want) = evaluate(id, point, n)?;
                let (got, want) = (got.values(), want.values());
                if let Some(q) = (0..=n).find(|&q| got[q] != want[q]) {
                    let outcome = Outcome::fail(
                        format!("{} differs from its closed form at ħ^{q}, point {p}", id.id),
                        json!({
                            "identity": id.id,
                            "point": p,
                            "order": q,
                            "tan_half": point.tan_half.iter().map(rational::format).collect::<Vec<_>>(),
                            "lambda": rational::format(&point.lambda),
                            "product": rational::format(&got[q]),
                            "closed_form": rational::format(&want[q]),
                        }),
                    );
                    return Ok((id.id.clone(), outcome));
                }
            }
            Ok((
                id.id.clone(),
                Outcome::pass(format!("closed form through ħ^{n} at {} points", points.len())),
            ))
        })
        .collect()
}

/// All sixteen identities at `count` seeded points.
pub fn verify_appendix(n: usize, count: usize, seed: u64) -> Result<Vec<(String, Outcome)>> {
    verify(&appendix_identities(), &random_points(count, seed), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn sixteen_distinct_products() {
        let ids = appendix_identities();
        assert_eq!(ids.len(), 16);
        let mut pairs: Vec<_> = ids.iter().map(|i| (i.left.name(), i.right.name())).collect();
        pairs.dedup();
        assert_eq!(pairs.len(), 16);
        assert_eq!(ids[5].id, "sinθ1cosθ2 * sinθ1cosθ2");
    }

    #[test]
    fn order_zero_is_the_pointwise_product() {
        let outcomes = verify_appendix(0, 3, 1).unwrap();
        assert!(outcomes.iter().all(|(_, o)| o.passed));
    }

    #[test]
    fn first_identity_by_hand_at_second_order() {
        // μ₂(s₁s₂, s₁s₂) = λ²(s₁²s₂² − c₁²c₂²).
        let point = TrigPoint { tan_half: [frac(1, 2), frac(1, 3)], lambda: frac(2, 3) };
        let (got, _) = evaluate(&appendix_identities()[0], &point, 2).unwrap();
        let (s1, c1, s2, c2) = (frac(4, 5), frac(3, 5), frac(3, 5), frac(4, 5));
        let want = frac(4, 9) * (&s1 * &s1 * &s2 * &s2 - &c1 * &c1 * &c2 * &c2);
        assert_eq!(got.values()[2], want);
        assert_eq!(got.values()[1], int(0));
    }

    #[test]
    fn tampered_table_is_located() {
        let mut ids = appendix_identities();
        // Flip the sign of the cosh·sinh term of one product.
        let form = &mut ids[9].closed_form.0;
        let last = form.len() - 1;
        form[last].0 = -form[last].0.clone();
        let outcomes = verify(&ids, &random_points(2, 3), 4).unwrap();
        let failed: Vec<_> = outcomes.iter().filter(|(_, o)| !o.passed).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].0, "cosθ1sinθ2 * sinθ1cosθ2");
        assert_eq!(failed[0].1.counterexample.as_ref().unwrap()["order"], 1);
    }
}
