//! Run reports: exact JSON and markdown renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::scalar::Anchor;
use crate::scenario::Expectation;
use crate::series::render_values;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    /// Failed, as the scenario declares it should.
    ExpectedFail,
    /// Passed although the scenario declares a failure.
    UnexpectedPass,
}

impl Status {
    pub fn is_ok(self) -> bool {
        matches!(self, Status::Pass | Status::Skipped | Status::ExpectedFail)
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
            Status::ExpectedFail => "EXPECTED-FAIL",
            Status::UnexpectedPass => "UNEXPECTED-PASS",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub status: Status,
    pub expect: Expectation,
    pub details: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub dim: usize,
    pub truncation: usize,
    pub jet_order: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub base_point: Vec<Anchor>,
}

/// One exact series, as its base-point coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    #[serde(with = "rational::serde_str_vec")]
    pub coefficients: Vec<Rational>,
}

impl Quantity {
    pub fn rendered(&self) -> String {
        format!("{} = {}", self.name, render_values(&self.coefficients))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub environment: Environment,
    pub checks: Vec<CheckEntry>,
    #[serde(default)]
    pub quantities: Vec<Quantity>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

impl Report {
    /// Every check passed, was skipped, or failed as declared.
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.status.is_ok())
    }

    pub fn exit_code(&self) -> i32 {
        if self.ok() {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn quantity(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let env = &self.environment;
        let _ = writeln!(out, "# {}\n", self.scenario);
        if !self.description.is_empty() {
            let _ = writeln!(out, "{}\n", self.description);
        }
        let _ = writeln!(
            out,
            "dimension {}, truncation ħ^{}, jet order {}, seed {}\n",
            env.dim, env.truncation, env.jet_order, env.seed
        );
        let _ = writeln!(out, "## Checks\n");
        let _ = writeln!(out, "| check | status | details |");
        let _ = writeln!(out, "|---|---|---|");
        for c in &self.checks {
            let _ = writeln!(out, "| {} | {} | {} |", c.name, c.status.label(), c.details.replace('|', "\\|"));
        }
        if !self.quantities.is_empty() {
            let _ = writeln!(out, "\n## Values at the base point\n");
            let _ = writeln!(out, "| value |");
            let _ = writeln!(out, "|---|");
            for q in &self.quantities {
                let _ = writeln!(out, "| {} |", q.rendered());
            }
        }
        let _ = writeln!(
            out,
            "\n{} of {} checks ok",
            self.checks.iter().filter(|c| c.status.is_ok()).count(),
            self.checks.len()
        );
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Markdown => self.to_markdown(),
        }
    }

    pub fn write(&self, path: &std::path::Path, format: Format) -> Result<()> {
        std::fs::write(path, self.render(format)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use serde_json::json;

    fn sample() -> Report {
        Report {
            scenario: "s".into(),
            description: String::new(),
            environment: Environment { dim: 2, truncation: 5, jet_order: 10, seed: 3, base_point: Vec::new() },
            checks: vec![
                CheckEntry {
                    name: "a".into(),
                    status: Status::Pass,
                    expect: Expectation::Pass,
                    details: "ok".into(),
                    counterexample: None,
                },
                CheckEntry {
                    name: "b".into(),
                    status: Status::ExpectedFail,
                    expect: Expectation::Fail,
                    details: "x | y".into(),
                    counterexample: Some(json!({"order": 2, "value": "-1/3"})),
                },
            ],
            quantities: vec![Quantity {
                name: "R¹₁".into(),
                coefficients: [0, 0, -1, 3, -3, 1].map(int).to_vec(),
            }],
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
        assert!(r.to_json().contains("\"-3\""));
    }

    #[test]
    fn markdown_row_and_exit_code() {
        let mut r = sample();
        let md = r.to_markdown();
        assert!(md.contains("| R¹₁ = −ħ² + 3ħ³ − 3ħ⁴ + ħ⁵ |"), "{md}");
        assert!(md.contains("x \\| y"));
        assert_eq!(r.exit_code(), 0);
        r.checks[1].status = Status::UnexpectedPass;
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn empty_report_passes() {
        let mut r = sample();
        r.checks.clear();
        assert!(r.ok());
        assert_eq!(r.exit_code(), 0);
    }
}
