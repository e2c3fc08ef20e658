//! COCO-style average precision for decoded detections.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{iou, Box2D};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDetection {
    pub image: usize,
    pub class: String,
    pub bbox: Box2D,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBox {
    pub image: usize,
    pub class: String,
    pub bbox: Box2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Highest-scoring detections kept per image and class.
    pub max_dets: usize,
    pub iou_thresholds: Vec<f64>,
}

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect()
}

/// `0.00, 0.01, ..., 1.00`.
pub fn recall_grid() -> Vec<f64> {
    (0..=100).map(|i| f64::from(i) / 100.0).collect()
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self { max_dets: 100, iou_thresholds: coco_iou_thresholds() }
    }
}

/// Indices of `class` detections in ranking order: per image only the top
/// `max_dets` survive; ties keep input order.
fn ranked(dets: &[ScoredDetection], class: &str, max_dets: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].class == class).collect();
    idx.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    let mut per_image = std::collections::HashMap::new();
    idx.retain(|&i| {
        let n = per_image.entry(dets[i].image).or_insert(0usize);
        *n += 1;
        *n <= max_dets
    });
    idx
}

/// True-positive flags in ranking order for one IoU threshold.
fn match_ranked(dets: &[ScoredDetection], order: &[usize], gts: &[&GroundTruthBox], threshold: f64) -> Vec<bool> {
    let mut used = vec![false; gts.len()];
    order
        .iter()
        .map(|&d| {
            let det = &dets[d];
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in gts.iter().enumerate() {
                if used[g] || gt.image != det.image {
                    continue;
                }
                let overlap = iou(&det.bbox, &gt.bbox);
                if overlap >= threshold && best.is_none_or(|(_, b)| overlap > b) {
                    best = Some((g, overlap));
                }
            }
            if let Some((g, _)) = best {
                used[g] = true;
            }
            best.is_some()
        })
        .collect()
}

/// 101-point interpolated area under the precision/recall curve.
fn interpolated_ap(tp: &[bool], n_gt: usize) -> f64 {
    let n = tp.len();
    let mut recall = Vec::with_capacity(n);
    let mut precision = Vec::with_capacity(n);
    let mut hits = 0usize;
    for (k, &is_tp) in tp.iter().enumerate() {
        hits += usize::from(is_tp);
        recall.push(hits as f64 / n_gt as f64);
        precision.push(hits as f64 / (k + 1) as f64);
    }
    for k in (0..n.saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let grid = recall_grid();
    let mut ptr = 0;
    let mut total = 0.0;
    for r in &grid {
        while ptr < n && recall[ptr] < *r {
            ptr += 1;
        }
        if ptr < n {
            total += precision[ptr];
        }
    }
    total / grid.len() as f64
}

/// AP of one class at one IoU threshold. 0 when the class has no ground truth.
pub fn average_precision(
    dets: &[ScoredDetection],
    gts: &[GroundTruthBox],
    class: &str,
    iou_threshold: f64,
    max_dets: usize,
) -> f64 {
    let class_gts: Vec<&GroundTruthBox> = gts.iter().filter(|g| g.class == class).collect();
    if class_gts.is_empty() {
        return 0.0;
    }
    let order = ranked(dets, class, max_dets);
    let tp = match_ranked(dets, &order, &class_gts, iou_threshold);
    interpolated_ap(&tp, class_gts.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class: String,
    /// One value per configured IoU threshold.
    pub ap: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    /// Mean over classes with ground truth and over all thresholds.
    pub map: f64,
    /// Mean AP at each threshold.
    pub ap_per_threshold: Vec<f64>,
    pub per_class: Vec<ClassAp>,
}

/// AP for every class that has ground truth, at every configured threshold.
pub fn evaluate_detections(dets: &[ScoredDetection], gts: &[GroundTruthBox], cfg: &DetectConfig) -> DetectionSummary {
    let classes: BTreeSet<&str> = gts.iter().map(|g| g.class.as_str()).collect();
    let per_class: Vec<ClassAp> = classes
        .into_par_iter()
        .map(|class| {
            let class_gts: Vec<&GroundTruthBox> = gts.iter().filter(|g| g.class == class).collect();
            let order = ranked(dets, class, cfg.max_dets);
            let ap = cfg
                .iou_thresholds
                .iter()
                .map(|&t| interpolated_ap(&match_ranked(dets, &order, &class_gts, t), class_gts.len()))
                .collect();
            ClassAp { class: class.to_string(), ap }
        })
        .collect();
    let n_t = cfg.iou_thresholds.len();
    let ap_per_threshold: Vec<f64> = (0..n_t)
        .map(|t| {
            if per_class.is_empty() {
                0.0
            } else {
                per_class.iter().map(|c| c.ap[t]).sum::<f64>() / per_class.len() as f64
            }
        })
        .collect();
    let map = if n_t == 0 { 0.0 } else { ap_per_threshold.iter().sum::<f64>() / n_t as f64 };
    DetectionSummary { map, ap_per_threshold, per_class }
}

/// Mean AP over classes with ground truth and IoU thresholds 0.50:0.05:0.95.
pub fn map_coco(dets: &[ScoredDetection], gts: &[GroundTruthBox]) -> f64 {
    evaluate_detections(dets, gts, &DetectConfig::default()).map
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> Box2D {
        Box2D::new(x0, y0, x1, y1).unwrap()
    }

    fn det(image: usize, class: &str, bbox: Box2D, score: f64) -> ScoredDetection {
        ScoredDetection { image, class: class.into(), bbox, score }
    }

    fn gt(image: usize, class: &str, bbox: Box2D) -> GroundTruthBox {
        GroundTruthBox { image, class: class.into(), bbox }
    }

    #[test]
    fn single_perfect_detection() {
        let bx = b(0.1, 0.1, 0.4, 0.4);
        assert_eq!(average_precision(&[det(0, "cat", bx, 0.9)], &[gt(0, "cat", bx)], "cat", 0.5, 100), 1.0);
    }

    #[test]
    fn false_positive_ranked_first() {
        let bx = b(0.1, 0.1, 0.4, 0.4);
        let dets = [det(0, "cat", b(0.6, 0.6, 0.9, 0.9), 0.9), det(0, "cat", bx, 0.8)];
        let ap = average_precision(&dets, &[gt(0, "cat", bx)], "cat", 0.5, 100);
        assert!((ap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_detections_or_no_gt() {
        let bx = b(0.1, 0.1, 0.4, 0.4);
        assert_eq!(average_precision(&[], &[gt(0, "cat", bx)], "cat", 0.5, 100), 0.0);
        assert_eq!(average_precision(&[det(0, "cat", bx, 0.5)], &[], "cat", 0.5, 100), 0.0);
    }

    #[test]
    fn map_examples() {
        let boxes = [b(0.0, 0.0, 0.3, 0.3), b(0.5, 0.5, 0.9, 0.8)];
        let gts = [gt(0, "cat", boxes[0]), gt(1, "dog", boxes[1])];
        let perfect = [det(0, "cat", boxes[0], 0.9), det(1, "dog", boxes[1], 0.8)];
        assert_eq!(map_coco(&perfect, &gts), 1.0);
        let wrong = [det(0, "dog", boxes[0], 0.9), det(1, "cat", boxes[1], 0.8)];
        assert_eq!(map_coco(&wrong, &gts), 0.0);
        // classes without ground truth do not enter the mean
        let extra = [perfect.to_vec(), vec![det(0, "bird", boxes[0], 0.99)]].concat();
        assert_eq!(map_coco(&extra, &gts), 1.0);
    }

    #[test]
    fn threshold_sensitivity() {
        // IoU 0.6: counts at 0.50, 0.55, 0.60 only
        let g = b(0.0, 0.0, 1.0, 1.0);
        let d = b(0.0, 0.0, 0.6, 1.0);
        let s = evaluate_detections(&[det(0, "a", d, 1.0)], &[gt(0, "a", g)], &DetectConfig::default());
        assert_eq!(s.ap_per_threshold[..3], [1.0, 1.0, 1.0]);
        assert!(s.ap_per_threshold[3..].iter().all(|&v| v == 0.0));
        assert!((s.map - 0.3).abs() < 1e-12);
    }

    #[test]
    fn one_gt_matched_once() {
        let bx = b(0.1, 0.1, 0.4, 0.4);
        let dets = [det(0, "a", bx, 0.9), det(0, "a", bx, 0.8)];
        let order = ranked(&dets, "a", 100);
        let g = gt(0, "a", bx);
        assert_eq!(match_ranked(&dets, &order, &[&g], 0.5), vec![true, false]);
    }

    #[test]
    fn max_dets_truncates_per_image() {
        let bx = b(0.1, 0.1, 0.4, 0.4);
        let dets = [det(0, "a", b(0.5, 0.5, 0.6, 0.6), 0.9), det(0, "a", bx, 0.8)];
        assert_eq!(average_precision(&dets, &[gt(0, "a", bx)], "a", 0.5, 1), 0.0);
        assert!((average_precision(&dets, &[gt(0, "a", bx)], "a", 0.5, 2) - 0.5).abs() < 1e-12);
    }

    fn separated_scene() -> impl Strategy<Value = (Vec<ScoredDetection>, Vec<GroundTruthBox>)> {
        // gts on disjoint cells of a 4x4 lattice; detections jitter inside a cell
        let cell = (0usize..2, 0usize..16, 0usize..2);
        let d = (0usize..2, 0usize..16, 0usize..2, 0.0..0.08f64, 0.0..0.08f64, 0.0..1.0f64);
        (proptest::collection::vec(cell, 1..10), proptest::collection::vec(d, 0..14)).prop_map(|(g, d)| {
            let at = |k: usize, dx: f64, dy: f64| {
                let (x, y) = ((k % 4) as f64 * 0.25, (k / 4) as f64 * 0.25);
                b(x + dx, y + dy, x + 0.15 + dx, y + 0.15 + dy)
            };
            let classes = ["p", "q"];
            let gts = g.iter().map(|&(img, k, c)| gt(img, classes[c], at(k, 0.0, 0.0))).collect();
            let dets = d.iter().map(|&(img, k, c, dx, dy, s)| det(img, classes[c], at(k, dx, dy), s)).collect();
            (dets, gts)
        })
    }

    proptest! {
        #[test]
        fn raising_a_true_positive_never_lowers_ap((dets, gts) in separated_scene(), pick in any::<usize>(), bump in 0.0..1.0f64) {
            let cfg = DetectConfig::default();
            for class in ["p", "q"] {
                let class_gts: Vec<&GroundTruthBox> = gts.iter().filter(|g| g.class == class).collect();
                if class_gts.is_empty() {
                    continue;
                }
                let order = ranked(&dets, class, cfg.max_dets);
                let tp = match_ranked(&dets, &order, &class_gts, 0.5);
                let tps: Vec<usize> = order.iter().zip(&tp).filter(|(_, t)| **t).map(|(i, _)| *i).collect();
                if tps.is_empty() {
                    continue;
                }
                let target = tps[pick % tps.len()];
                let mut raised = dets.clone();
                raised[target].score = (raised[target].score + bump).min(1.0);
                let before = average_precision(&dets, &gts, class, 0.5, cfg.max_dets);
                let after = average_precision(&raised, &gts, class, 0.5, cfg.max_dets);
                prop_assert!(after >= before - 1e-12, "{before} -> {after}");
            }
        }

        #[test]
        fn map_invariant_to_relabeling((dets, gts) in separated_scene()) {
            let base = map_coco(&dets, &gts);
            let rename = |c: &str| if c == "p" { "zz".to_string() } else { "aa".to_string() };
            let swap = |i: usize| 7 - i;
            let d2: Vec<_> = dets.iter().map(|d| ScoredDetection { image: swap(d.image), class: rename(&d.class), ..d.clone() }).collect();
            let g2: Vec<_> = gts.iter().map(|g| GroundTruthBox { image: swap(g.image), class: rename(&g.class), ..g.clone() }).collect();
            prop_assert!((map_coco(&d2, &g2) - base).abs() < 1e-12);
        }
    }
}
