//! Executes a scenario: builds the requested geometry lazily and runs its checks.

use std::cell::OnceCell;

use serde_json::json;

use crate::appendix::verify_appendix;
use crate::check::Outcome;
use crate::connection::{
    canonical_connection, check_chiral_parity, check_chirality_and_torsion, check_compatibility,
    check_connection_parity, check_metric_parallel, check_raise_lower, Chiral, Connection,
};
use crate::curvature::{
    check_ricci_relations, check_riemann_antisymmetry, check_riemann_parity, check_right_curvature,
    contracted_bianchi_check, curvature_covariant_derivative, first_bianchi_check, ricci_bundle,
    ricci_equivalence_check, riemann, right_riemann, second_bianchi_check, CurvatureDerivative,
    RicciBundle, Riemann,
};
use crate::embedding::{
    check_classical_limit, check_theta1_independence, classical_geometry, classical_metric,
    embedding_connection_and_chiral, fluctuation_metric, spherical_fluctuation, IsometricEmbedding,
    SphericalFluctuation,
};
use crate::error::{Error, Result};
use crate::metric::{check_metric_parity, InverseMetric, NcMetric};
use crate::quasi::{
    check_against_canonical, check_decomposition, check_sigma_injective, check_torsion_free,
    first_bianchi_star_check, CanonicalReference, QuasiConnection, QuasiGeometry, StarCurvature,
};
use crate::random;
use crate::rational;
use crate::report::{CheckEntry, Environment, Quantity, Report, Status};
use crate::scenario::{ChiralSpec, Expectation, MetricSpec, Scenario};
use crate::series::{superscript, HbarSeries};
use crate::star::StarProduct;
use crate::tensor::{index_tuples, Tensor};

/// Every check identifier with a one-line description.
pub const CHECKS: &[(&str, &str)] = &[
    ("metric-inverse", "two-sided star-inverse of the metric exists through the truncation"),
    ("metric-parity", "metric parity hypothesis: even orders symmetric, odd orders antisymmetric"),
    ("chiral-parity", "chiral parity hypothesis: even orders of the chiral coefficients vanish"),
    ("compatibility", "connection is compatible with the metric"),
    ("torsion-chirality", "connection is torsion free with the prescribed chirality"),
    ("metric-parallel", "metric and inverse metric are covariantly constant"),
    ("raise-lower", "raised coefficients lower back to the lowered ones"),
    ("connection-parity", "parity relations between left and right connection coefficients"),
    ("riemann-antisymmetry", "Riemann tensor antisymmetric in its last index pair"),
    ("right-curvature", "right Riemann tensor agrees with the left one where it must"),
    ("riemann-parity", "parity relations of the Riemann tensor"),
    ("ricci-relations", "the two Ricci curvatures are related by the parity transpose"),
    ("ricci-equivalence", "parity hypotheses and the whole equivalence cascade hold"),
    ("first-bianchi", "cyclic sum of the curvature operator vanishes"),
    ("second-bianchi", "second Bianchi identity"),
    ("contracted-bianchi", "contracted Bianchi identity"),
    ("expected-values", "computed series equal the values listed in the scenario"),
    ("classical-limit", "ħ⁰ layers match the classical Levi-Civita geometry of the embedding"),
    ("moyal-axioms", "coordinate commutators, Leibniz rule and associativity on random samples"),
    ("closed-form", "spherical fluctuation block equals its cosh/sinh closed forms"),
    ("symmetry-pattern", "spherical metric: g₂ₖ = −gₖ₂ for k ≠ 2, every other pair symmetric"),
    ("theta1-independence", "metric and connection coefficients do not depend on θ₁"),
    ("quasi-torsion-free", "quasi-connections are torsion free"),
    ("quasi-first-bianchi", "first Bianchi identity for the quasi-connection curvature"),
    ("quasi-decomposition", "tangential/normal decomposition of ambient vectors"),
    ("quasi-sigma-injective", "tangent vectors are recovered from their ambient image"),
    ("quasi-canonical", "quasi-connection pipeline equals the canonical one for a Moyal product"),
    ("appendix", "products of sines and cosines against their closed forms"),
];

enum Verdict {
    Done(Outcome),
    Skip(String),
}

fn cached<T>(cell: &OnceCell<Result<T>>, f: impl FnOnce() -> Result<T>) -> Result<&T> {
    cell.get_or_init(f).as_ref().map_err(Clone::clone)
}

/// Lazily built objects of one scenario run.
pub struct Pipeline<'a> {
    scenario: &'a Scenario,
    star: StarProduct,
    truncation: usize,
    jet_order: usize,
    embedding: OnceCell<Result<Option<IsometricEmbedding>>>,
    spherical: OnceCell<Result<Option<SphericalFluctuation>>>,
    metric: OnceCell<Result<NcMetric>>,
    inverse: OnceCell<Result<InverseMetric>>,
    connection: OnceCell<Result<(Connection, Chiral)>>,
    riemann: OnceCell<Result<Riemann>>,
    right: OnceCell<Result<Tensor>>,
    bundle: OnceCell<Result<RicciBundle>>,
    derivative: OnceCell<Result<CurvatureDerivative>>,
    quasi: OnceCell<Result<QuasiGeometry>>,
    quasi_connection: OnceCell<Result<QuasiConnection>>,
    quasi_curvature: OnceCell<Result<StarCurvature>>,
}

impl<'a> Pipeline<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        Ok(Pipeline {
            scenario,
            star: scenario.star()?,
            truncation: scenario.truncation,
            jet_order: scenario.jet_order()?,
            embedding: OnceCell::new(),
            spherical: OnceCell::new(),
            metric: OnceCell::new(),
            inverse: OnceCell::new(),
            connection: OnceCell::new(),
            riemann: OnceCell::new(),
            right: OnceCell::new(),
            bundle: OnceCell::new(),
            derivative: OnceCell::new(),
            quasi: OnceCell::new(),
            quasi_connection: OnceCell::new(),
            quasi_curvature: OnceCell::new(),
        })
    }

    fn spherical(&self) -> Result<Option<&SphericalFluctuation>> {
        cached(&self.spherical, || match &self.scenario.metric {
            Some(MetricSpec::Spherical(s)) => Ok(Some(spherical_fluctuation(
                &self.scenario.spherical_spec(s)?,
                self.scenario.base(),
                self.truncation,
                self.jet_order,
            )?)),
            _ => Ok(None),
        })
        .map(Option::as_ref)
    }

    pub fn embedding(&self) -> Result<Option<&IsometricEmbedding>> {
        if let Some(s) = self.spherical()? {
            return Ok(Some(&s.embedding));
        }
        cached(&self.embedding, || self.scenario.embedding()).map(Option::as_ref)
    }

    fn require_embedding(&self) -> Result<&IsometricEmbedding> {
        self.embedding()?
            .ok_or_else(|| Error::Validation("this check needs an embedding or spherical metric source".into()))
    }

    pub fn metric(&self) -> Result<&NcMetric> {
        cached(&self.metric, || {
            if let Some(s) = self.spherical()? {
                return Ok(s.metric.clone());
            }
            if let Some(g) = self.scenario.constant_metric() {
                return NcMetric::new(g, self.star.clone());
            }
            match self.embedding()? {
                Some(x) => fluctuation_metric(x, &self.star, self.truncation),
                None => Err(Error::Validation("scenario has no metric source".into())),
            }
        })
    }

    pub fn inverse(&self) -> Result<&InverseMetric> {
        cached(&self.inverse, || self.metric()?.star_inverse())
    }

    pub fn connection(&self) -> Result<&(Connection, Chiral)> {
        cached(&self.connection, || {
            let g = self.metric()?;
            let inv = self.inverse()?;
            let chiral = match self.scenario.chiral_source() {
                ChiralSpec::Embedding => return embedding_connection_and_chiral(self.require_embedding()?, g, inv),
                ChiralSpec::Zero => Chiral::zero(g.dim(), self.truncation),
                ChiralSpec::Explicit(_) => Chiral::new(self.scenario.explicit_chiral().expect("explicit"))?,
            };
            Ok((canonical_connection(g, inv, &chiral)?, chiral))
        })
    }

    pub fn riemann(&self) -> Result<&Riemann> {
        cached(&self.riemann, || riemann(self.metric()?, self.inverse()?, &self.connection()?.0))
    }

    pub fn right_riemann(&self) -> Result<&Tensor> {
        cached(&self.right, || right_riemann(self.metric()?, &self.connection()?.0))
    }

    pub fn bundle(&self) -> Result<&RicciBundle> {
        cached(&self.bundle, || ricci_bundle(self.metric()?, self.inverse()?, self.riemann()?))
    }

    pub fn derivative(&self) -> Result<&CurvatureDerivative> {
        cached(&self.derivative, || {
            curvature_covariant_derivative(self.metric()?, self.inverse()?, &self.connection()?.0, self.riemann()?)
        })
    }

    pub fn quasi(&self) -> Result<&QuasiGeometry> {
        cached(&self.quasi, || {
            QuasiGeometry::new(self.require_embedding()?, &self.star, self.truncation, self.scenario.seed)
        })
    }

    pub fn quasi_connection(&self) -> Result<&QuasiConnection> {
        cached(&self.quasi_connection, || self.quasi()?.connection())
    }

    pub fn quasi_curvature(&self) -> Result<&StarCurvature> {
        cached(&self.quasi_curvature, || self.quasi()?.curvature(self.quasi_connection()?))
    }

    /// A computed series by name and 1-based index.
    pub fn quantity(&self, name: &str, index: &[usize]) -> Result<HbarSeries> {
        let idx: Vec<usize> = index.iter().map(|i| i - 1).collect();
        let rank = |r: usize| -> Result<()> {
            if idx.len() == r {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} takes {r} indices, got {}", idx.len())))
            }
        };
        let t: &Tensor = match name {
            "scalar" => {
                rank(0)?;
                return Ok(self.bundle()?.scalar.clone());
            }
            "gamma_up" | "gamma_right_up" => {
                rank(3)?;
                let conn = &self.connection()?.0;
                let (k, i, j) = (idx[0], idx[1], idx[2]);
                let t = if name == "gamma_up" { &conn.upper } else { &conn.upper_right };
                return Ok(t.get(&[i, j, k]).clone());
            }
            "metric" => self.metric()?.tensor(),
            "inverse" => self.inverse()?.tensor(),
            "chiral" => self.connection()?.1.tensor(),
            "gamma" => &self.connection()?.0.lower,
            "gamma_right" => &self.connection()?.0.lower_right,
            "riemann" => &self.riemann()?.lower,
            "riemann_right" => self.right_riemann()?,
            "ricci" => &self.bundle()?.ricci,
            "theta" => &self.bundle()?.theta,
            "ricci_up" => &self.bundle()?.ricci_up,
            "theta_up" => &self.bundle()?.theta_up,
            _ => return Err(Error::Validation(format!("unknown quantity {name:?}"))),
        };
        rank(t.rank())?;
        Ok(t.get(&idx).clone())
    }

    fn run_check(&self, id: &str) -> Result<Vec<(String, Verdict)>> {
        let one = |v: Verdict| Ok(vec![(id.to_string(), v)]);
        let done = |o: Outcome| one(Verdict::Done(o));
        match id {
            "metric-inverse" => {
                self.inverse()?;
                done(Outcome::pass(format!("g⋆g⁻¹ = g⁻¹⋆g = δ through ħ^{}", self.truncation)))
            }
            "metric-parity" => done(check_metric_parity(self.metric()?)?),
            "chiral-parity" => done(check_chiral_parity(&self.connection()?.1)?),
            "compatibility" => done(check_compatibility(self.metric()?, &self.connection()?.0)?),
            "torsion-chirality" => {
                let (conn, chiral) = self.connection()?;
                done(check_chirality_and_torsion(conn, chiral)?)
            }
            "metric-parallel" => done(check_metric_parallel(self.metric()?, self.inverse()?, &self.connection()?.0)?),
            "raise-lower" => done(check_raise_lower(self.metric()?, &self.connection()?.0)?),
            "connection-parity" => done(check_connection_parity(&self.connection()?.0)?),
            "riemann-antisymmetry" => done(check_riemann_antisymmetry(self.riemann()?)?),
            "right-curvature" => done(check_right_curvature(self.riemann()?, self.right_riemann()?)?),
            "riemann-parity" => done(check_riemann_parity(self.riemann()?)?),
            "ricci-relations" => done(check_ricci_relations(self.bundle()?)?),
            "ricci-equivalence" => {
                let (conn, chiral) = self.connection()?;
                let r = ricci_equivalence_check(self.metric()?, chiral, conn, self.riemann()?, self.bundle()?)?;
                let parts = [
                    ("hypotheses", &r.hypotheses),
                    ("connection parity", &r.connection_parity),
                    ("Riemann parity", &r.riemann_parity),
                    ("Ricci equivalence", &r.ricci_equivalence),
                ];
                let details = parts
                    .iter()
                    .map(|(n, o)| format!("{n}: {}", if o.passed { "holds" } else { "fails" }))
                    .collect::<Vec<_>>()
                    .join(", ");
                if r.all_hold() {
                    done(Outcome::pass(details))
                } else {
                    let payload: serde_json::Map<_, _> = parts
                        .iter()
                        .map(|(n, o)| (n.to_string(), json!({"passed": o.passed, "details": o.details})))
                        .collect();
                    done(Outcome::fail(details, serde_json::Value::Object(payload)))
                }
            }
            "first-bianchi" => done(first_bianchi_check(&self.riemann()?.operator)?),
            "second-bianchi" => done(second_bianchi_check(self.derivative()?)?),
            "contracted-bianchi" => done(contracted_bianchi_check(self.derivative()?)?),
            "expected-values" => done(self.check_expected()?),
            "classical-limit" => {
                let Some(x) = self.embedding()? else {
                    return one(Verdict::Skip("no embedding".into()));
                };
                let classical = classical_geometry(&classical_metric(x)?)?;
                done(check_classical_limit(&self.connection()?.0, &self.riemann()?.lower, &classical)?)
            }
            "moyal-axioms" => done(self.check_star_axioms()?),
            "closed-form" | "symmetry-pattern" => {
                let Some(s) = self.spherical()? else {
                    return one(Verdict::Skip("no spherical metric source".into()));
                };
                done(if id == "closed-form" { s.check_closed_form()? } else { s.check_symmetry_pattern()? })
            }
            "theta1-independence" => {
                if self.spherical()?.is_none() {
                    return one(Verdict::Skip("no spherical metric source".into()));
                }
                let conn = &self.connection()?.0;
                done(check_theta1_independence(&[
                    ("g", self.metric()?.tensor()),
                    ("Γ", &conn.lower),
                    ("Γ̃", &conn.lower_right),
                ])?)
            }
            "quasi-torsion-free" => done(check_torsion_free(self.quasi_connection()?)?),
            "quasi-first-bianchi" => done(first_bianchi_star_check(self.quasi_curvature()?)?),
            "quasi-decomposition" | "quasi-sigma-injective" => {
                let geom = self.quasi()?;
                let x = self.require_embedding()?;
                let base = self.scenario.base();
                let mut rng = random::rng(self.scenario.seed);
                let width = if id == "quasi-decomposition" { x.ambient_dim() } else { x.dim() };
                let samples: Vec<Vec<HbarSeries>> = (0..3)
                    .map(|_| (0..width).map(|_| random::series(&mut rng, &base, self.truncation, self.jet_order)).collect())
                    .collect();
                done(if id == "quasi-decomposition" {
                    check_decomposition(geom, &samples)?
                } else {
                    check_sigma_injective(geom, &samples)?
                })
            }
            "quasi-canonical" => {
                if !matches!(self.star, StarProduct::Moyal(_)) {
                    return one(Verdict::Skip("star product is not Moyal".into()));
                }
                let conn = &self.connection()?.0;
                let reference = CanonicalReference {
                    metric: self.metric()?,
                    inverse: self.inverse()?,
                    upper: &conn.upper,
                    upper_right: &conn.upper_right,
                    riemann: &self.riemann()?.lower,
                    riemann_right: self.right_riemann()?,
                    ricci: self.bundle()?,
                };
                done(check_against_canonical(
                    self.quasi()?,
                    self.quasi_connection()?,
                    self.quasi_curvature()?,
                    &reference,
                )?)
            }
            "appendix" => {
                let spec = self
                    .scenario
                    .appendix
                    .as_ref()
                    .ok_or_else(|| Error::Validation("appendix check needs an appendix block".into()))?;
                Ok(verify_appendix(spec.order, spec.points, self.scenario.seed)?
                    .into_iter()
                    .map(|(name, o)| (format!("appendix {name}"), Verdict::Done(o)))
                    .collect())
            }
            _ => Err(Error::Validation(format!("unknown check {id:?}"))),
        }
    }

    fn check_expected(&self) -> Result<Outcome> {
        let n = self.truncation;
        for e in &self.scenario.expected {
            let got = self.quantity(&e.quantity, &e.index)?.values();
            let through = e.through.unwrap_or(n).min(n);
            for q in 0..=through {
                let want = e.series.get(q).cloned().unwrap_or_default();
                if got[q] != want {
                    let label = format!("{}{:?}", e.quantity, e.index);
                    return Ok(Outcome::fail(
                        format!("{label} differs at ħ^{q}"),
                        json!({
                            "quantity": e.quantity,
                            "index": e.index,
                            "order": q,
                            "got": rational::format(&got[q]),
                            "want": rational::format(&want),
                        }),
                    ));
                }
            }
        }
        Ok(Outcome::pass(format!("{} listed values reproduced exactly", self.scenario.expected.len())))
    }

    fn check_star_axioms(&self) -> Result<Outcome> {
        let base = self.scenario.base();
        let n = self.truncation;
        let mut rng = random::rng(self.scenario.seed);
        let commutators = self.star.check_commutators(&base, n)?;
        let mut series = || random::series(&mut rng, &base, n, self.jet_order);
        let pairs: Vec<_> = (0..20).map(|_| (series(), series())).collect();
        let triples: Vec<_> = (0..20).map(|_| (series(), series(), series())).collect();
        let mut leibniz = self.star.check_leibniz(&pairs)?;
        leibniz.details = format!("Leibniz: {}", leibniz.details);
        let mut assoc = self.star.check_associativity(&triples)?;
        assoc.details = format!("associativity: {}", assoc.details);
        Ok(Outcome::all([commutators, leibniz, assoc]))
    }

    /// Series computed so far, rendered by their base-point values.
    fn quantities(&self) -> Vec<Quantity> {
        let mut out = Vec::new();
        let mut push = |name: String, s: &HbarSeries| {
            out.push(Quantity { name, coefficients: s.values() })
        };
        let sub = |idx: &[usize]| digits(idx, false);
        let sup = |idx: &[usize]| digits(idx, true);
        let all = |t: &Tensor| index_tuples(t.dim(), t.rank());
        let nonzero = |t: &Tensor| all(t).into_iter().filter(|i| !t.get(i).is_zero()).collect::<Vec<_>>();
        if let Some(Ok(g)) = self.metric.get() {
            for i in all(g.tensor()) {
                push(format!("g{}", sub(&i)), g.tensor().get(&i));
            }
        }
        if let Some(Ok(inv)) = self.inverse.get() {
            for i in all(inv.tensor()) {
                push(format!("g{}", sup(&i)), inv.tensor().get(&i));
            }
        }
        if let Some(Ok((conn, chiral))) = self.connection.get() {
            for i in nonzero(chiral.tensor()) {
                push(format!("Υ{}", sub(&i)), chiral.tensor().get(&i));
            }
            for (name, t) in [("Γ", &conn.lower), ("Γ̃", &conn.lower_right)] {
                for i in nonzero(t) {
                    push(format!("{name}{}", sub(&i)), t.get(&i));
                }
            }
            for (name, t) in [("Γ", &conn.upper), ("Γ̃", &conn.upper_right)] {
                for i in nonzero(t) {
                    push(format!("{name}{}{}", sup(&i[2..]), sub(&i[..2])), t.get(&i));
                }
            }
        }
        if let Some(Ok(r)) = self.riemann.get() {
            for i in nonzero(&r.lower) {
                push(format!("R{}", sub(&i)), r.lower.get(&i));
            }
        }
        if let Some(Ok(r)) = self.right.get() {
            for i in nonzero(r) {
                push(format!("R̃{}", sub(&i)), r.get(&i));
            }
        }
        if let Some(Ok(b)) = self.bundle.get() {
            for (name, t, up) in [("R", &b.ricci, false), ("Θ", &b.theta, false), ("R", &b.ricci_up, true), ("Θ", &b.theta_up, true)] {
                for i in all(t) {
                    let label = if up { format!("{}{}", sup(&i[..1]), sub(&i[1..])) } else { sub(&i) };
                    push(format!("{name}{label}"), t.get(&i));
                }
            }
            push("R".into(), &b.scalar);
        }
        if let Some(Ok(q)) = self.quasi_connection.get() {
            for i in nonzero(&q.upper) {
                push(format!("⋆Γ{}{}", sup(&i[2..]), sub(&i[..2])), q.upper.get(&i));
            }
        }
        if let Some(Ok(c)) = self.quasi_curvature.get() {
            for i in nonzero(&c.riemann) {
                push(format!("⋆R{}", sub(&i)), c.riemann.get(&i));
            }
            push("⋆R".into(), &c.left.scalar);
        }
        out
    }
}

const SUBSCRIPTS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];

/// 1-based indices as sub- or superscript digits, comma-separated past 9.
fn digits(idx: &[usize], up: bool) -> String {
    let render = |i: usize| -> String {
        if up {
            superscript(i + 1)
        } else {
            (i + 1).to_string().chars().map(|d| SUBSCRIPTS[d.to_digit(10).unwrap() as usize]).collect()
        }
    };
    let sep = if idx.iter().any(|&i| i >= 9) { "," } else { "" };
    idx.iter().map(|&i| render(i)).collect::<Vec<_>>().join(sep)
}

fn entry(name: String, expect: Expectation, verdict: Verdict) -> CheckEntry {
    match verdict {
        Verdict::Skip(reason) => CheckEntry { name, status: Status::Skipped, expect, details: reason, counterexample: None },
        Verdict::Done(o) => {
            let status = match (o.passed, expect) {
                (true, Expectation::Pass) => Status::Pass,
                (false, Expectation::Pass) => Status::Fail,
                (true, Expectation::Fail) => Status::UnexpectedPass,
                (false, Expectation::Fail) => Status::ExpectedFail,
            };
            CheckEntry { name, status, expect, details: o.details, counterexample: o.counterexample }
        }
    }
}

/// Runs every declared check in order. Engine errors become failed checks.
pub fn run(scenario: &Scenario) -> Result<Report> {
    let pipe = Pipeline::new(scenario)?;
    let mut checks = Vec::new();
    for spec in &scenario.checks {
        let expect = spec.expect();
        match pipe.run_check(spec.id()) {
            Ok(verdicts) => checks.extend(verdicts.into_iter().map(|(name, v)| entry(name, expect, v))),
            Err(e) => checks.push(CheckEntry {
                name: spec.id().to_string(),
                status: Status::Fail,
                expect,
                details: format!("error: {e}"),
                counterexample: Some(json!({"error": e.to_string()})),
            }),
        }
    }
    Ok(Report {
        scenario: scenario.name.clone(),
        description: scenario.description.clone(),
        environment: Environment {
            dim: scenario.chart.dim,
            truncation: scenario.truncation,
            jet_order: pipe.jet_order,
            seed: scenario.seed,
            base_point: scenario.base_point.clone(),
        },
        checks,
        quantities: pipe.quantities(),
    })
}

/// Report of the trigonometric product table on its own.
pub fn appendix_report(order: usize, points: usize, seed: u64) -> Result<Report> {
    let checks = verify_appendix(order, points, seed)?
        .into_iter()
        .map(|(name, o)| entry(name, Expectation::Pass, Verdict::Done(o)))
        .collect();
    Ok(Report {
        scenario: "appendix".into(),
        description: format!("{points} random points, seed {seed}"),
        environment: Environment { dim: 2, truncation: order, jet_order: order, seed, base_point: Vec::new() },
        checks,
        quantities: Vec::new(),
    })
}
