//! Relative comparison of two reports: candidate / reference x 100 per metric.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalReport, HarnessError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeValue {
    pub reference: f64,
    pub candidate: f64,
    /// Unrounded `candidate / reference * 100`.
    pub relative: f64,
    /// `relative` rounded to one decimal for display.
    pub display: String,
}

impl RelativeValue {
    pub fn new(reference: f64, candidate: f64) -> Option<Self> {
        if reference == 0.0 {
            return None;
        }
        let relative = candidate / reference * 100.0;
        Some(Self { reference, candidate, relative, display: format!("{relative:.1}") })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub task: String,
    pub reference_fingerprint: String,
    pub candidate_fingerprint: String,
    pub metrics: BTreeMap<String, RelativeValue>,
}

impl Comparison {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparisons always serialize");
        s.push('\n');
        s
    }
}

/// Requires the same task and the same metric names on both sides. Rounding
/// happens only in the display string, after the ratio is taken.
pub fn compare_reports(reference: &EvalReport, candidate: &EvalReport) -> Result<Comparison, HarnessError> {
    if reference.task != candidate.task {
        return Err(HarnessError::TaskMismatch { reference: reference.task.clone(), candidate: candidate.task.clone() });
    }
    let only = |a: &EvalReport, b: &EvalReport| -> Vec<String> {
        a.metrics.keys().filter(|k| !b.metrics.contains_key(*k)).cloned().collect()
    };
    let (only_reference, only_candidate) = (only(reference, candidate), only(candidate, reference));
    if !only_reference.is_empty() || !only_candidate.is_empty() {
        return Err(HarnessError::MetricMismatch { only_reference, only_candidate });
    }
    let mut metrics = BTreeMap::new();
    for (name, &r) in &reference.metrics {
        let value = RelativeValue::new(r, candidate.metrics[name])
            .ok_or_else(|| HarnessError::DivisionByZeroReference { metric: name.clone() })?;
        metrics.insert(name.clone(), value);
    }
    Ok(Comparison {
        task: reference.task.clone(),
        reference_fingerprint: reference.fingerprint.clone(),
        candidate_fingerprint: candidate.fingerprint.clone(),
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(values: &[(&str, f64)]) -> EvalReport {
        let metrics = values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        EvalReport::new("match", metrics, 1, BTreeMap::new(), serde_json::json!({}))
    }

    #[test]
    fn quoted_cells() {
        let reference = report(&[("coco", 140.0), ("textcaps", 126.3)]);
        let candidate = report(&[("coco", 139.8), ("textcaps", 126.6)]);
        let c = compare_reports(&reference, &candidate).unwrap();
        assert_eq!(c.metrics["coco"].display, "99.9");
        assert_eq!(c.metrics["textcaps"].display, "100.2");
    }

    #[test]
    fn identical_reports_give_100() {
        let r = report(&[("a", 0.3), ("b", 71.25)]);
        let c = compare_reports(&r, &r).unwrap();
        assert!(c.metrics.values().all(|v| v.relative == 100.0 && v.display == "100.0"));
    }

    #[test]
    fn errors() {
        let r = report(&[("a", 1.0)]);
        assert!(matches!(compare_reports(&r, &report(&[("b", 1.0)])), Err(HarnessError::MetricMismatch { .. })));
        assert!(matches!(
            compare_reports(&report(&[("a", 0.0)]), &r),
            Err(HarnessError::DivisionByZeroReference { .. })
        ));
        let mut other = r.clone();
        other.task = "ocr".into();
        assert!(matches!(compare_reports(&r, &other), Err(HarnessError::TaskMismatch { .. })));
    }
}
