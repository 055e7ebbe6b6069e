//! One verified inequality instance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// An inequality `lhs ≤ rhs` with `slack = rhs - lhs`; it passes iff
/// `slack ≥ -tolerance`. Equalities are recorded with `lhs = |difference|`
/// and `rhs = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub context: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SlackRecord {
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        let verdict = if slack >= -tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack,
            tolerance,
            verdict,
            context: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// `|a - b| ≤ tolerance`.
    pub fn equality(name: impl Into<String>, a: f64, b: f64, tolerance: f64) -> Self {
        let mut rec = Self::inequality(name, (a - b).abs(), 0.0, tolerance);
        rec.context.insert("left".into(), a);
        rec.context.insert("right".into(), b);
        rec
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.context.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equality_records_absolute_difference() {
        let r = SlackRecord::equality("id", 1.0, 1.0 + 1e-10, 1e-9);
        assert!(r.passed());
        assert!(r.lhs > 0.0 && r.rhs == 0.0);
        let r = SlackRecord::equality("id", 1.0, 1.1, 1e-9);
        assert!(!r.passed());
    }

    proptest! {
        #[test]
        fn verdict_matches_slack(lhs in -10.0f64..10.0, rhs in -10.0f64..10.0, tol in 0.0f64..1.0) {
            let r = SlackRecord::inequality("x", lhs, rhs, tol);
            prop_assert_eq!(r.slack, rhs - lhs);
            prop_assert_eq!(r.passed(), r.slack >= -tol);
        }
    }
}
