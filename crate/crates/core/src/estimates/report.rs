//! Uniform record of an inequality or identity evaluated on computed data.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// `ratio <= 1 + slack`.
    Pass,
    /// `ratio > 1 + slack` for an inequality with an explicit constant.
    Fail,
    /// A ratio against an unspecified constant; no verdict.
    Measured,
    /// The inputs do not satisfy the setting of the check (e.g. nonzero force on the annulus).
    NotApplicable,
    /// A stated hypothesis fails numerically (e.g. a vanishing mean velocity).
    HypothesisNotMet,
    /// The measured quantity is below its own uncertainty.
    Inconclusive,
    /// The data contradict the inequality in a way no constant can repair.
    Anomaly,
}

impl Status {
    /// Failures that make a verification run exit with an error status.
    pub fn is_failure(&self) -> bool {
        matches!(self, Status::Fail | Status::Anomaly)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    /// Which inequality is being checked, in words.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub status: Status,
    pub slack: f64,
    /// SHA-256 of the inputs the report was computed from.
    pub digest: String,
    /// Extra named values (measured constants, radii, uncertainties).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<(String, f64)>,
}

/// `lhs / rhs` with the convention `0 / 0 = 0` and a huge finite value for `x / 0`.
pub fn safe_ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs <= 0.0 {
        f64::MAX
    } else {
        (lhs / rhs).min(f64::MAX)
    }
}

impl EstimateReport {
    /// Inequality `lhs <= rhs` with relative slack; `lhs > 0 = rhs` is an anomaly.
    pub fn inequality(name: &str, anchor: &str, lhs: f64, rhs: f64, slack: f64, digest: String) -> Self {
        let ratio = safe_ratio(lhs, rhs);
        let status = if !lhs.is_finite() || !rhs.is_finite() || (rhs <= 0.0 && lhs > 0.0) {
            Status::Anomaly
        } else if ratio <= 1.0 + slack {
            Status::Pass
        } else {
            Status::Fail
        };
        Self { name: name.into(), anchor: anchor.into(), lhs, rhs, ratio, status, slack, digest, details: Vec::new() }
    }

    /// Ratio against an unknown constant: `ratio = lhs / rhs` is the measured constant.
    pub fn measured(name: &str, anchor: &str, lhs: f64, rhs: f64, digest: String) -> Self {
        let ratio = safe_ratio(lhs, rhs);
        let status = if rhs <= 0.0 && lhs > 0.0 { Status::Anomaly } else { Status::Measured };
        Self { name: name.into(), anchor: anchor.into(), lhs, rhs, ratio, status, slack: 0.0, digest, details: Vec::new() }
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.push((key.into(), value));
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Incremental SHA-256 over typed inputs.
#[derive(Clone, Default)]
pub struct Fingerprint(Sha256);

impl Fingerprint {
    pub fn new(tag: &str) -> Self {
        let mut h = Sha256::new();
        h.update(tag.as_bytes());
        Self(h)
    }

    pub fn f64(mut self, v: f64) -> Self {
        self.0.update(v.to_le_bytes());
        self
    }

    pub fn f64s(mut self, vs: &[f64]) -> Self {
        self.0.update((vs.len() as u64).to_le_bytes());
        for v in vs {
            self.0.update(v.to_le_bytes());
        }
        self
    }

    pub fn str(mut self, s: &str) -> Self {
        self.0.update((s.len() as u64).to_le_bytes());
        self.0.update(s.as_bytes());
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_conventions() {
        assert_eq!(safe_ratio(0.0, 0.0), 0.0);
        assert_eq!(safe_ratio(1.0, 0.0), f64::MAX);
        assert_eq!(safe_ratio(1.0, 2.0), 0.5);
    }

    #[test]
    fn pass_iff_ratio_within_slack() {
        let d = String::new();
        assert_eq!(EstimateReport::inequality("a", "", 1.05, 1.0, 0.1, d.clone()).status, Status::Pass);
        assert_eq!(EstimateReport::inequality("a", "", 1.2, 1.0, 0.1, d.clone()).status, Status::Fail);
        assert_eq!(EstimateReport::inequality("a", "", 0.0, 0.0, 0.1, d.clone()).status, Status::Pass);
        assert_eq!(EstimateReport::inequality("a", "", 1e-3, 0.0, 0.1, d).status, Status::Anomaly);
    }

    #[test]
    fn fingerprint_is_deterministic_and_sensitive() {
        let a = Fingerprint::new("x").f64s(&[1.0, 2.0]).finish();
        let b = Fingerprint::new("x").f64s(&[1.0, 2.0]).finish();
        let c = Fingerprint::new("x").f64s(&[1.0, 2.0000001]).finish();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
