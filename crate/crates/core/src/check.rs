//! Outcome of an exact identity check.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub passed: bool,
    pub details: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

impl Outcome {
    pub fn pass(details: impl Into<String>) -> Self {
        Outcome {
            passed: true,
            details: details.into(),
            counterexample: None,
        }
    }

    pub fn fail(details: impl Into<String>, counterexample: Value) -> Self {
        Outcome {
            passed: false,
            details: details.into(),
            counterexample: Some(counterexample),
        }
    }

    /// Combines outcomes; the first failure wins.
    pub fn all(parts: impl IntoIterator<Item = Outcome>) -> Self {
        let mut details = Vec::new();
        for p in parts {
            if !p.passed {
                return p;
            }
            details.push(p.details);
        }
        Outcome::pass(details.join("; "))
    }
}
