//! Evaluation reports and their config fingerprint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::TOOL_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    /// Metric name to value. Always finite.
    pub metrics: BTreeMap<String, f64>,
    pub example_count: u64,
    /// Bookkeeping counters such as missing predictions or skipped examples.
    pub counts: BTreeMap<String, u64>,
    pub config: serde_json::Value,
    pub tool_version: String,
    /// Hex SHA-256 of the canonical config JSON and the tool version.
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// `serde_json::Value` objects are backed by a sorted map, so serializing a
/// value gives a canonical key order.
pub fn config_fingerprint(config: &serde_json::Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(config).expect("json values always serialize").as_bytes());
    hasher.update([0u8]);
    hasher.update(TOOL_VERSION.as_bytes());
    hex::encode(hasher.finalize())
}

impl EvalReport {
    pub fn new(
        task: impl Into<String>,
        metrics: BTreeMap<String, f64>,
        example_count: u64,
        counts: BTreeMap<String, u64>,
        config: serde_json::Value,
    ) -> Self {
        let fingerprint = config_fingerprint(&config);
        Self {
            task: task.into(),
            metrics,
            example_count,
            counts,
            config,
            tool_version: TOOL_VERSION.to_string(),
            fingerprint,
            timestamp: None,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn fingerprint_is_deterministic_and_key_order_free() {
        let a = json!({"iou_threshold": 0.5, "coord_order": "yxyx", "seed": 3});
        let b: serde_json::Value =
            serde_json::from_str(r#"{"seed": 3, "coord_order": "yxyx", "iou_threshold": 0.5}"#).unwrap();
        assert_eq!(config_fingerprint(&a), config_fingerprint(&b));
        assert_eq!(config_fingerprint(&a).len(), 64);
        assert_ne!(config_fingerprint(&a), config_fingerprint(&json!({"seed": 4})));
    }

    #[test]
    fn json_round_trip() {
        let r = EvalReport::new(
            "ocr",
            BTreeMap::from([("f1".to_string(), 1.0)]),
            2,
            BTreeMap::new(),
            json!({"iou_threshold": 0.5}),
        );
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
        assert!(!r.to_json().contains("timestamp"));
    }
}
