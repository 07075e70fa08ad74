//! The record every check emits.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    RelativeL2,
    MaxAbs,
    Pointwise,
}

/// One comparison. `passed` holds exactly when `value ≤ tolerance`; a NaN
/// value never passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub check: String,
    pub metric: Metric,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

impl ComparisonReport {
    pub fn new(check: impl Into<String>, metric: Metric, value: f64, tolerance: f64) -> Self {
        Self { check: check.into(), metric, value, tolerance, passed: value <= tolerance, note: None, metadata: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata.insert(key.to_owned(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn named(mut self, check: impl Into<String>) -> Self {
        self.check = check.into();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Replaces the value and recomputes `passed`.
    pub fn set_value(&mut self, value: f64) {
        self.value = value;
        self.passed = value <= self.tolerance;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passed_tracks_tolerance() {
        assert!(ComparisonReport::new("a", Metric::MaxAbs, 0.1, 0.1).passed);
        assert!(!ComparisonReport::new("a", Metric::MaxAbs, 0.2, 0.1).passed);
        assert!(!ComparisonReport::new("a", Metric::MaxAbs, f64::NAN, 0.1).passed);
        let mut r = ComparisonReport::new("a", Metric::MaxAbs, 0.2, 0.1);
        r.set_value(0.05);
        assert!(r.passed);
    }

    #[test]
    fn serializes_kebab_metric() {
        let r = ComparisonReport::new("x", Metric::RelativeL2, 0.0, 0.05).with("gamma_tau", 1.0);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"metric\":\"relative-l2\""));
        assert!(s.contains("\"gamma_tau\":1.0"));
        let back: ComparisonReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
