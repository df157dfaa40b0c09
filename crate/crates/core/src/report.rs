//! Machine-readable check reports.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub points: usize,
    /// Wall time; `None` unless timing was requested, so reports stay reproducible.
    pub seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl VerificationReport {
    pub fn new(check: &str, max_residual: f64, tolerance: f64, points: usize) -> Self {
        VerificationReport {
            check: check.to_string(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            points,
            seconds: None,
            details: Map::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    /// Forces failure (e.g. a sub-condition that is not captured by the residual).
    pub fn fail_because(mut self, reason: &str) -> Self {
        self.pass = false;
        self.details.insert("failure".into(), reason.into());
        self
    }

    pub fn timed(mut self, start: Instant, enabled: bool) -> Self {
        if enabled {
            self.seconds = Some(start.elapsed().as_secs_f64());
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_tolerance_and_can_be_overridden() {
        let r = VerificationReport::new("abreu", 1e-9, 1e-8, 4);
        assert!(r.pass);
        let r = r.with_detail("grid", 15).fail_because("boundary point");
        assert!(!r.pass);
        assert_eq!(r.details["failure"], "boundary point");
        assert_eq!(r.details["grid"], 15);
    }

    #[test]
    fn timing_is_omitted_unless_enabled() {
        let start = Instant::now();
        let r = VerificationReport::new("det", 0.0, 1e-10, 1).timed(start, false);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["seconds"].is_null());
        assert!(json.get("details").is_none());
        assert!(r.timed(start, true).seconds.is_some());
    }
}
