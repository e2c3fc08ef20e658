//! Dispatch from JSONL inputs to the metric modules.
//!
//! Examples are processed in id order, in parallel, and reduced in that fixed
//! order, so a report depends only on the record contents and the config.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::formats::{
    by_id, read_jsonl, unit_box, word_box, DetectRecord, Identified, ImageDims, ObjectRecord, OcrRecord, TableRecord,
    TextRecord, SCHEMA_VERSION,
};
use super::{EvalReport, HarnessError, Task};
use crate::codec::{decode_detections, parse_tokens, CoordOrder};
use crate::geometry::{pad_to_square, Box2D, PixelBox};
use crate::metrics::detect::{evaluate_detections, DetectConfig, GroundTruthBox, ScoredDetection};
use crate::metrics::ocr::{MatchConfig, OcrCounts, WordAnnotation};
use crate::metrics::order_independent_mean;
use crate::metrics::seq::{error_rates, kern_distances, smiles_validate, KernDocument, RateMode, TextNormalizer};
use crate::metrics::table::{grits_score, teds, GritsFlavor};
use crate::table::{parse_table_html_with, validate_table_example, TableGrid, TableParseOptions, ValidationConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalConfig {
    pub ocr: MatchConfig,
    /// Location-token order; `None` picks the task default.
    pub coord_order: Option<CoordOrder>,
    pub detect: DetectConfig,
    pub rate_mode: RateMode,
    pub normalizer: TextNormalizer,
    pub table_validation: ValidationConfig,
    pub fill_missing_cells: bool,
    /// Recorded in the fingerprint; evaluation itself draws no randomness.
    pub seed: Option<u64>,
    /// Fail on missing or extra prediction ids instead of scoring them as empty.
    pub strict: bool,
    /// Collect one diagnostic record per example.
    #[serde(skip)]
    pub diagnostics: bool,
}

impl EvalConfig {
    pub fn coord_order_for(&self, task: Task) -> CoordOrder {
        self.coord_order.unwrap_or(match task {
            Task::Table => CoordOrder::TABLE_DEFAULT,
            _ => CoordOrder::DETECTION_DEFAULT,
        })
    }

    /// The settings that influence `task`, as recorded in its report.
    pub fn report_config(&self, task: Task) -> Value {
        let mut cfg = json!({
            "task": task.name(),
            "schema_version": SCHEMA_VERSION,
            "strict": self.strict,
            "seed": self.seed,
        });
        let extra = match task {
            Task::Ocr => json!({ "iou_threshold": self.ocr.iou_threshold, "matching": self.ocr.mode }),
            Task::Table => json!({
                "coord_order": self.coord_order_for(task),
                "fill_missing_cells": self.fill_missing_cells,
                "validation": self.table_validation,
            }),
            Task::Detect => json!({
                "coord_order": self.coord_order_for(task),
                "iou_thresholds": self.detect.iou_thresholds,
                "max_dets": self.detect.max_dets,
            }),
            Task::Kern => json!({ "rate_mode": self.rate_mode }),
            Task::Smiles => json!({}),
            Task::Match => json!({ "normalizer": self.normalizer }),
        };
        if let (Value::Object(base), Value::Object(more)) = (&mut cfg, extra) {
            base.extend(more);
        }
        cfg
    }
}

/// Parsed ground truth and predictions for one task.
#[derive(Debug, Clone)]
pub enum EvalInputs {
    Ocr { gt: Vec<OcrRecord>, pred: Vec<OcrRecord> },
    Table { gt: Vec<TableRecord>, pred: Vec<TableRecord> },
    Detect { gt: Vec<DetectRecord>, pred: Vec<DetectRecord> },
    Text { task: Task, gt: Vec<TextRecord>, pred: Vec<TextRecord> },
}

impl EvalInputs {
    pub fn load(task: Task, gt_path: &Path, pred_path: &Path) -> Result<Self, HarnessError> {
        Ok(match task {
            Task::Ocr => EvalInputs::Ocr { gt: read_jsonl(gt_path)?, pred: read_jsonl(pred_path)? },
            Task::Table => EvalInputs::Table { gt: read_jsonl(gt_path)?, pred: read_jsonl(pred_path)? },
            Task::Detect => EvalInputs::Detect { gt: read_jsonl(gt_path)?, pred: read_jsonl(pred_path)? },
            Task::Kern | Task::Smiles | Task::Match => {
                EvalInputs::Text { task, gt: read_jsonl(gt_path)?, pred: read_jsonl(pred_path)? }
            }
        })
    }

    pub fn task(&self) -> Task {
        match self {
            EvalInputs::Ocr { .. } => Task::Ocr,
            EvalInputs::Table { .. } => Task::Table,
            EvalInputs::Detect { .. } => Task::Detect,
            EvalInputs::Text { task, .. } => *task,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub report: EvalReport,
    /// Per-example records in id order; empty unless requested.
    pub diagnostics: Vec<Value>,
}

pub fn run_eval(task: Task, gt_path: &Path, pred_path: &Path, cfg: &EvalConfig) -> Result<EvalOutput, HarnessError> {
    evaluate_files(&EvalInputs::load(task, gt_path, pred_path)?, cfg)
}

/// Ground truth paired with its prediction, in id order.
struct Pairs<'a, G, P> {
    items: Vec<(&'a G, Option<&'a P>)>,
    missing: u64,
    extra: u64,
}

fn pair_up<'a, G: Identified, P: Identified>(gt: &'a [G], pred: &'a [P], strict: bool) -> Result<Pairs<'a, G, P>, HarnessError> {
    let gts = by_id(gt.iter().collect::<Vec<_>>());
    let mut preds = by_id(pred.iter().collect::<Vec<_>>());
    let mut items = Vec::with_capacity(gts.len());
    let mut missing_ids = Vec::new();
    for (id, g) in gts {
        let p = preds.remove(&id);
        if p.is_none() {
            missing_ids.push(id);
        }
        items.push((g, p));
    }
    let extra_ids: Vec<String> = preds.into_keys().collect();
    if strict && (!missing_ids.is_empty() || !extra_ids.is_empty()) {
        let first = missing_ids.first().or(extra_ids.first()).cloned().unwrap_or_default();
        return Err(HarnessError::IdMismatch { missing: missing_ids.len(), extra: extra_ids.len(), first });
    }
    if !missing_ids.is_empty() {
        log::warn!("{} examples have no prediction and are scored as empty", missing_ids.len());
    }
    if !extra_ids.is_empty() {
        log::warn!("{} predictions have no ground truth and are ignored", extra_ids.len());
    }
    Ok(Pairs { items, missing: missing_ids.len() as u64, extra: extra_ids.len() as u64 })
}

impl<I: Identified> Identified for &I {
    fn id(&self) -> &str {
        (*self).id()
    }
}

/// Runs `f` over the pairs in parallel and returns results in pair order;
/// the first failure in that order wins.
fn per_example<G, P, T, F>(pairs: &Pairs<'_, G, P>, f: F) -> Result<Vec<T>, HarnessError>
where
    G: Sync,
    P: Sync,
    T: Send,
    F: Fn(&G, Option<&P>) -> Result<T, HarnessError> + Sync + Send,
{
    let results: Vec<Result<T, HarnessError>> = pairs.items.par_iter().map(|(g, p)| f(g, *p)).collect();
    results.into_iter().collect()
}

fn invalid(id: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::InvalidExample { id: id.to_string(), message: message.into() }
}

struct Tally {
    metrics: BTreeMap<String, f64>,
    counts: BTreeMap<String, u64>,
    evaluated: u64,
    diagnostics: Vec<Value>,
}

pub fn evaluate_files(inputs: &EvalInputs, cfg: &EvalConfig) -> Result<EvalOutput, HarnessError> {
    let task = inputs.task();
    let (mut tally, missing, extra) = match inputs {
        EvalInputs::Ocr { gt, pred } => {
            let pairs = pair_up(gt, pred, cfg.strict)?;
            (eval_ocr(&pairs, cfg)?, pairs.missing, pairs.extra)
        }
        EvalInputs::Table { gt, pred } => {
            let pairs = pair_up(gt, pred, cfg.strict)?;
            (eval_table(&pairs, cfg)?, pairs.missing, pairs.extra)
        }
        EvalInputs::Detect { gt, pred } => {
            let pairs = pair_up(gt, pred, cfg.strict)?;
            (eval_detect(&pairs, cfg)?, pairs.missing, pairs.extra)
        }
        EvalInputs::Text { task, gt, pred } => {
            let pairs = pair_up(gt, pred, cfg.strict)?;
            (eval_text(*task, &pairs, cfg)?, pairs.missing, pairs.extra)
        }
    };
    if tally.evaluated == 0 {
        return Err(HarnessError::NoExamples);
    }
    debug_assert!(tally.metrics.values().all(|v| v.is_finite()));
    tally.counts.insert("missing_predictions".into(), missing);
    tally.counts.insert("extra_predictions".into(), extra);
    let report = EvalReport::new(task.name(), tally.metrics, tally.evaluated, tally.counts, cfg.report_config(task));
    let diagnostics = if cfg.diagnostics { tally.diagnostics } else { Vec::new() };
    Ok(EvalOutput { report, diagnostics })
}

fn eval_ocr(pairs: &Pairs<'_, OcrRecord, OcrRecord>, cfg: &EvalConfig) -> Result<Tally, HarnessError> {
    let words = |recs: &[super::formats::WordRecord], id: &str, image: Option<ImageDims>| {
        recs.iter()
            .map(|w| word_box(w, image).map(|b| WordAnnotation::new(b, w.text.clone())))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| invalid(id, m))
    };
    let per = per_example(pairs, |g, p| {
        let gts = words(&g.words, &g.id, g.image)?;
        let preds = match p {
            Some(p) => words(&p.words, &g.id, g.image)?,
            None => Vec::new(),
        };
        Ok((g.id.clone(), OcrCounts::for_image(&preds, &gts, &cfg.ocr)))
    })?;
    let mut total = OcrCounts::default();
    let mut diagnostics = Vec::new();
    for (id, c) in &per {
        total += *c;
        diagnostics.push(json!({"id": id, "matched": c.matched, "predictions": c.predictions, "ground_truths": c.ground_truths}));
    }
    let prf = total.prf();
    Ok(Tally {
        metrics: BTreeMap::from([
            ("precision".into(), prf.precision),
            ("recall".into(), prf.recall),
            ("f1".into(), prf.f1),
        ]),
        counts: BTreeMap::from([
            ("matched".into(), total.matched),
            ("predictions".into(), total.predictions),
            ("ground_truths".into(), total.ground_truths),
        ]),
        evaluated: per.len() as u64,
        diagnostics,
    })
}

enum TableOutcome {
    Skipped { id: String, reason: String },
    Scored { id: String, scores: [f64; 4], unparseable: bool },
}

fn eval_table(pairs: &Pairs<'_, TableRecord, TableRecord>, cfg: &EvalConfig) -> Result<Tally, HarnessError> {
    let opts = TableParseOptions { order: cfg.coord_order_for(Task::Table), fill_missing_cells: cfg.fill_missing_cells };
    let per = per_example(pairs, |g, p| {
        let gt = match parse_table_html_with(&g.html, &opts) {
            Ok(grid) => grid,
            Err(e) => return Ok(TableOutcome::Skipped { id: g.id.clone(), reason: e.to_string() }),
        };
        if let Some(dims) = g.image {
            let size = dims.size().map_err(|m| invalid(&g.id, m))?;
            if let crate::table::Validity::Skip(reason) = validate_table_example(&gt, size, &cfg.table_validation) {
                return Ok(TableOutcome::Skipped { id: g.id.clone(), reason: reason.to_string() });
            }
        }
        let (pred, unparseable) = match p.map(|p| parse_table_html_with(&p.html, &opts)) {
            Some(Ok(grid)) => (grid, false),
            Some(Err(_)) => (TableGrid::empty(), true),
            None => (TableGrid::empty(), false),
        };
        let scores = [
            teds(&pred, &gt, false),
            teds(&pred, &gt, true),
            grits_score(&pred, &gt, GritsFlavor::Top).f,
            grits_score(&pred, &gt, GritsFlavor::Con).f,
        ];
        Ok(TableOutcome::Scored { id: g.id.clone(), scores, unparseable })
    })?;

    const NAMES: [&str; 4] = ["teds", "s_teds", "grits_top", "grits_con"];
    let mut columns: [Vec<f64>; 4] = Default::default();
    let (mut skipped, mut unparseable_count) = (0u64, 0u64);
    let mut diagnostics = Vec::new();
    for outcome in per {
        match outcome {
            TableOutcome::Skipped { id, reason } => {
                log::info!("skipping ground-truth table {id}: {reason}");
                skipped += 1;
                diagnostics.push(json!({"id": id, "skipped": reason}));
            }
            TableOutcome::Scored { id, scores, unparseable } => {
                unparseable_count += u64::from(unparseable);
                let mut d = json!({"id": id, "unparseable_prediction": unparseable});
                for (k, s) in scores.iter().enumerate() {
                    columns[k].push(*s);
                    d[NAMES[k]] = json!(s);
                }
                diagnostics.push(d);
            }
        }
    }
    let evaluated = columns[0].len() as u64;
    let metrics = NAMES.iter().zip(columns).map(|(n, v)| (n.to_string(), order_independent_mean(v))).collect();
    Ok(Tally {
        metrics,
        counts: BTreeMap::from([("skipped".into(), skipped), ("unparseable_predictions".into(), unparseable_count)]),
        evaluated,
        diagnostics,
    })
}

/// Boxes in the evaluation frame: the padded square when the ground truth
/// gives an image size, unit coordinates otherwise.
pub(crate) fn frame_box(b: [f64; 4], image: Option<ImageDims>) -> Result<Box2D, String> {
    match image {
        Some(dims) => {
            let size = dims.size()?;
            pad_to_square(&PixelBox::new(b[0], b[1], b[2], b[3]), size).map_err(|e| e.to_string())
        }
        None => unit_box(b, None),
    }
}

struct DetectExample {
    id: String,
    gts: Vec<(String, Box2D)>,
    dets: Vec<(String, Box2D, f64)>,
    undecodable: bool,
}

fn detect_example(g: &DetectRecord, p: Option<&DetectRecord>, order: CoordOrder) -> Result<DetectExample, HarnessError> {
    let objects = g.objects.as_ref().ok_or_else(|| invalid(&g.id, "ground truth needs `objects`"))?;
    let gts = objects
        .iter()
        .map(|o| frame_box(o.bbox, g.image).map(|b| (o.label.clone(), b)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|m| invalid(&g.id, m))?;
    let mut undecodable = false;
    let dets = match p {
        None => Vec::new(),
        Some(p) => match (&p.detections, &p.text) {
            (Some(list), _) => structured_detections(list, g.image).map_err(|m| invalid(&g.id, m))?,
            (None, Some(text)) => match decode_text(text, p.token_probs.as_deref(), order) {
                Ok(d) => d,
                Err(reason) => {
                    log::warn!("prediction {} is not decodable: {reason}", g.id);
                    undecodable = true;
                    Vec::new()
                }
            },
            (None, None) => return Err(invalid(&g.id, "prediction needs `detections` or `text`")),
        },
    };
    Ok(DetectExample { id: g.id.clone(), gts, dets, undecodable })
}

fn structured_detections(list: &[ObjectRecord], image: Option<ImageDims>) -> Result<Vec<(String, Box2D, f64)>, String> {
    list.iter()
        .map(|o| {
            let score = o.score.ok_or("detections need a `score`")?;
            if !(0.0..=1.0).contains(&score) {
                return Err(format!("score {score} outside [0, 1]"));
            }
            Ok((o.label.clone(), frame_box(o.bbox, image)?, score))
        })
        .collect()
}

pub(crate) fn decode_text(text: &str, probs: Option<&[f64]>, order: CoordOrder) -> Result<Vec<(String, Box2D, f64)>, String> {
    let tokens = parse_tokens(text).map_err(|e| e.to_string())?;
    let ones;
    let probs = match probs {
        Some(p) => p,
        None => {
            ones = vec![1.0; tokens.len()];
            &ones
        }
    };
    let found = decode_detections(&tokens, probs, order).map_err(|e| e.to_string())?;
    Ok(found.into_iter().map(|d| (d.label().to_string(), d.bbox, d.score().unwrap_or(1.0))).collect())
}

fn eval_detect(pairs: &Pairs<'_, DetectRecord, DetectRecord>, cfg: &EvalConfig) -> Result<Tally, HarnessError> {
    let order = cfg.coord_order_for(Task::Detect);
    let per = per_example(pairs, |g, p| detect_example(g, p, order))?;
    let mut gts = Vec::new();
    let mut dets = Vec::new();
    let mut undecodable = 0u64;
    let mut diagnostics = Vec::new();
    for (image, ex) in per.into_iter().enumerate() {
        undecodable += u64::from(ex.undecodable);
        diagnostics.push(json!({
            "id": ex.id,
            "ground_truths": ex.gts.len(),
            "detections": ex.dets.len(),
            "undecodable_prediction": ex.undecodable,
        }));
        gts.extend(ex.gts.into_iter().map(|(class, bbox)| GroundTruthBox { image, class, bbox }));
        dets.extend(ex.dets.into_iter().map(|(class, bbox, score)| ScoredDetection { image, class, bbox, score }));
    }
    let evaluated = diagnostics.len() as u64;
    let summary = evaluate_detections(&dets, &gts, &cfg.detect);
    let mut metrics = BTreeMap::from([("map".to_string(), summary.map)]);
    for (t, ap) in cfg.detect.iou_thresholds.iter().zip(&summary.ap_per_threshold) {
        // ap50, ap75 and friends
        let pct = (t * 100.0).round();
        if (t * 100.0 - pct).abs() < 1e-9 && (pct == 50.0 || pct == 75.0) {
            metrics.insert(format!("ap{pct}"), *ap);
        }
    }
    for c in &summary.per_class {
        metrics.insert(format!("ap/{}", c.class), order_independent_mean(c.ap.clone()));
    }
    Ok(Tally {
        metrics,
        counts: BTreeMap::from([
            ("ground_truths".into(), gts.len() as u64),
            ("detections".into(), dets.len() as u64),
            ("classes".into(), summary.per_class.len() as u64),
            ("undecodable_predictions".into(), undecodable),
        ]),
        evaluated,
        diagnostics,
    })
}

fn eval_text(task: Task, pairs: &Pairs<'_, TextRecord, TextRecord>, cfg: &EvalConfig) -> Result<Tally, HarnessError> {
    let pred_text = |p: Option<&TextRecord>| p.map_or(String::new(), |p| p.text.clone());
    match task {
        Task::Kern => {
            let per = per_example(pairs, |g, p| {
                let (pd, gd) = (KernDocument::new(pred_text(p)), KernDocument::new(g.text.clone()));
                kern_distances(&pd, &gd, 0).map(|d| (g.id.clone(), d)).map_err(|e| invalid(&g.id, e.to_string()))
            })?;
            let dists: Vec<_> = per.iter().map(|(_, d)| *d).collect();
            let diagnostics = per
                .iter()
                .map(|(id, d)| {
                    json!({"id": id, "char_dist": d.char_dist, "char_len": d.char_len, "symbol_dist": d.symbol_dist,
                           "symbol_len": d.symbol_len, "line_dist": d.line_dist, "line_len": d.line_len})
                })
                .collect();
            if dists.is_empty() {
                return Err(HarnessError::NoExamples);
            }
            let rates = error_rates(&dists, cfg.rate_mode).map_err(|_| HarnessError::NoExamples)?;
            Ok(Tally {
                metrics: BTreeMap::from([("cer".into(), rates.cer), ("ser".into(), rates.ser), ("ler".into(), rates.ler)]),
                counts: BTreeMap::new(),
                evaluated: dists.len() as u64,
                diagnostics,
            })
        }
        Task::Smiles | Task::Match => {
            let per = per_example(pairs, |g, p| {
                let pred = pred_text(p);
                let (hit, valid) = if task == Task::Smiles {
                    (pred.trim() == g.text.trim(), smiles_validate(pred.trim()).is_valid())
                } else {
                    (cfg.normalizer.normalize(&pred) == cfg.normalizer.normalize(&g.text), true)
                };
                Ok((g.id.clone(), hit, valid))
            })?;
            let n = per.len() as u64;
            let hits = per.iter().filter(|e| e.1).count() as u64;
            let valid = per.iter().filter(|e| e.2).count() as u64;
            let pct = |k: u64| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
            let diagnostics = per
                .iter()
                .map(|(id, hit, v)| if task == Task::Smiles { json!({"id": id, "match": hit, "valid": v}) } else { json!({"id": id, "match": hit}) })
                .collect();
            let (metrics, counts) = if task == Task::Smiles {
                (
                    BTreeMap::from([("full_match".into(), pct(hits)), ("valid_smiles".into(), pct(valid))]),
                    BTreeMap::from([("matches".into(), hits), ("valid_predictions".into(), valid)]),
                )
            } else {
                (BTreeMap::from([("exact_match".into(), pct(hits))]), BTreeMap::from([("matches".into(), hits)]))
            };
            Ok(Tally { metrics, counts, evaluated: n, diagnostics })
        }
        _ => unreachable!("structured tasks are dispatched elsewhere"),
    }
}

#[cfg(test)]
mod tests {
    use super::super::formats::parse_jsonl;
    use super::*;

    fn text_inputs(task: Task, gt: &str, pred: &str) -> EvalInputs {
        EvalInputs::Text { task, gt: parse_jsonl(gt, "gt").unwrap(), pred: parse_jsonl(pred, "pred").unwrap() }
    }

    #[test]
    fn ocr_perfect() {
        let gt = r#"{"id": "a", "words": [{"box": [0.1, 0.1, 0.3, 0.2], "text": "Hi"}, {"box": [0.5, 0.5, 0.6, 0.6], "text": "x"}]}"#;
        let inputs = EvalInputs::Ocr { gt: parse_jsonl(gt, "gt").unwrap(), pred: parse_jsonl(gt, "pred").unwrap() };
        let out = evaluate_files(&inputs, &EvalConfig::default()).unwrap();
        assert_eq!(out.report.metrics["f1"], 1.0);
        assert_eq!(out.report.counts["matched"], 2);
    }

    #[test]
    fn table_skip_is_counted() {
        // second example: the only box extends past the 100 px wide frame
        let gt = concat!(
            r#"{"id": "ok", "html": "<table><tr><td>a</td></tr></table>"}"#, "\n",
            r#"{"id": "bad", "html": "<table><tr><td coords=\"<loc0000><loc0000><loc1023><loc0100>\">a</td></tr></table>", "image": {"width": 100, "height": 200}}"#,
        );
        let pred = r#"{"id": "ok", "html": "<table><tr><td>b</td></tr></table>"}"#;
        let inputs = EvalInputs::Table { gt: parse_jsonl(gt, "gt").unwrap(), pred: parse_jsonl(pred, "pred").unwrap() };
        let out = evaluate_files(&inputs, &EvalConfig::default()).unwrap();
        assert_eq!(out.report.example_count, 1);
        assert_eq!(out.report.counts["skipped"], 1);
        assert_eq!(out.report.metrics["teds"], 0.75);
        assert_eq!(out.report.metrics["s_teds"], 1.0);
    }

    #[test]
    fn missing_predictions_are_empty_unless_strict() {
        let gt = "{\"id\": 1, \"text\": \"CCO\"}\n{\"id\": 2, \"text\": \"c1ccccc1\"}";
        let pred = "{\"id\": 1, \"text\": \" CCO \"}\n{\"id\": 3, \"text\": \"C\"}";
        let out = evaluate_files(&text_inputs(Task::Smiles, gt, pred), &EvalConfig::default()).unwrap();
        assert_eq!(out.report.metrics["full_match"], 50.0);
        assert_eq!(out.report.counts["missing_predictions"], 1);
        assert_eq!(out.report.counts["extra_predictions"], 1);
        let strict = EvalConfig { strict: true, ..Default::default() };
        let err = evaluate_files(&text_inputs(Task::Smiles, gt, pred), &strict).unwrap_err();
        assert!(matches!(err, HarnessError::IdMismatch { missing: 1, extra: 1, .. }));
    }

    #[test]
    fn kern_example_rates() {
        let gt = r#"{"id": "s", "text": "a b\nc d e"}"#;
        let pred = r#"{"id": "s", "text": "a b\nc x e"}"#;
        let out = evaluate_files(&text_inputs(Task::Kern, gt, pred), &EvalConfig::default()).unwrap();
        assert!((out.report.metrics["cer"] - 100.0 / 9.0).abs() < 1e-12);
        assert!((out.report.metrics["ser"] - 20.0).abs() < 1e-12);
        assert_eq!(out.report.metrics["ler"], 50.0);
    }

    #[test]
    fn detect_from_tokens_and_structured() {
        let gt = r#"{"id": "i", "objects": [{"box": [0.25, 0.5, 0.75, 1.0], "label": "cat"}]}"#;
        let tokens = r#"{"id": "i", "text": "<loc0512><loc0256><loc1023><loc0768> cat<eos>"}"#;
        let out = evaluate_files(
            &EvalInputs::Detect { gt: parse_jsonl(gt, "gt").unwrap(), pred: parse_jsonl(tokens, "p").unwrap() },
            &EvalConfig::default(),
        )
        .unwrap();
        assert_eq!(out.report.metrics["map"], 1.0);
        let structured = r#"{"id": "i", "detections": [{"box": [0.25, 0.5, 0.75, 1.0], "label": "dog", "score": 0.9}]}"#;
        let out = evaluate_files(
            &EvalInputs::Detect { gt: parse_jsonl(gt, "gt").unwrap(), pred: parse_jsonl(structured, "p").unwrap() },
            &EvalConfig::default(),
        )
        .unwrap();
        assert_eq!(out.report.metrics["map"], 0.0);
    }

    #[test]
    fn record_order_does_not_matter() {
        let a = "{\"id\": 1, \"text\": \"x y\"}\n{\"id\": 2, \"text\": \"z\"}";
        let b = "{\"id\": 2, \"text\": \"z\"}\n{\"id\": 1, \"text\": \"x y\"}";
        let p = "{\"id\": 2, \"text\": \"q\"}\n{\"id\": 1, \"text\": \"x\"}";
        let r1 = evaluate_files(&text_inputs(Task::Kern, a, p), &EvalConfig::default()).unwrap();
        let r2 = evaluate_files(&text_inputs(Task::Kern, b, p), &EvalConfig::default()).unwrap();
        assert_eq!(r1.report.to_json(), r2.report.to_json());
    }

    #[test]
    fn empty_ground_truth_is_an_error() {
        assert!(matches!(
            evaluate_files(&text_inputs(Task::Match, "", ""), &EvalConfig::default()),
            Err(HarnessError::NoExamples)
        ));
    }
}
