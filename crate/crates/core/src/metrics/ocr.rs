//! Word-level end-to-end text spotting evaluation.
//!
//! A prediction is a true positive when its box has IoU >= 0.5 with an
//! unmatched ground-truth word and the transcriptions are byte-identical (no
//! case, punctuation or length normalization).

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::geometry::{iou, Box2D};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct WordAnnotation {
    pub bbox: Box2D,
    pub transcription: String,
}

impl WordAnnotation {
    pub fn new(bbox: Box2D, transcription: impl Into<String>) -> Self {
        Self { bbox, transcription: transcription.into() }
    }

    /// Reduces a polygon given as `(x, y)` vertices to its bounding box.
    /// Returns `None` for an empty polygon.
    pub fn from_polygon(points: &[(f64, f64)], transcription: impl Into<String>) -> Option<Self> {
        let (first, rest) = points.split_first()?;
        let mut b = [first.0, first.1, first.0, first.1];
        for &(x, y) in rest {
            b = [b[0].min(x), b[1].min(y), b[2].max(x), b[3].max(y)];
        }
        Some(Self::new(Box2D::from_corners_clamped(b[0], b[1], b[2], b[3]), transcription))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Highest IoU first; ties by ground-truth index, then prediction index.
    #[default]
    Greedy,
    /// Maximum-cardinality bipartite matching via augmenting paths.
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub iou_threshold: f64,
    pub mode: MatchMode,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { iou_threshold: DEFAULT_IOU_THRESHOLD, mode: MatchMode::Greedy }
    }
}

/// Admissible `(pred, gt, iou)` pairs.
fn candidates(preds: &[WordAnnotation], gts: &[WordAnnotation], threshold: f64) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for (p, pred) in preds.iter().enumerate() {
        if pred.transcription.is_empty() {
            continue;
        }
        for (g, gt) in gts.iter().enumerate() {
            if pred.transcription != gt.transcription {
                continue;
            }
            let overlap = iou(&pred.bbox, &gt.bbox);
            if overlap >= threshold {
                out.push((p, g, overlap));
            }
        }
    }
    out
}

/// One-to-one `(pred, gt)` matches, sorted by prediction index.
pub fn match_words(preds: &[WordAnnotation], gts: &[WordAnnotation], cfg: &MatchConfig) -> Vec<(usize, usize)> {
    let mut cands = candidates(preds, gts, cfg.iou_threshold);
    let mut pairs = match cfg.mode {
        MatchMode::Greedy => {
            cands.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)).then(a.0.cmp(&b.0)));
            let mut pred_used = vec![false; preds.len()];
            let mut gt_used = vec![false; gts.len()];
            let mut pairs = Vec::new();
            for (p, g, _) in cands {
                if !pred_used[p] && !gt_used[g] {
                    pred_used[p] = true;
                    gt_used[g] = true;
                    pairs.push((p, g));
                }
            }
            pairs
        }
        MatchMode::Maximum => {
            let mut adj = vec![Vec::new(); preds.len()];
            for (p, g, _) in cands {
                adj[p].push(g);
            }
            maximum_matching(&adj, gts.len())
        }
    };
    pairs.sort_unstable();
    pairs
}

/// Kuhn's augmenting-path algorithm; `adj[left]` lists right vertices.
fn maximum_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<(usize, usize)> {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    for u in 0..adj.len() {
        let mut seen = vec![false; n_right];
        augment(u, adj, &mut seen, &mut owner);
    }
    owner.iter().enumerate().filter_map(|(v, u)| u.map(|u| (u, v))).collect()
}

/// Counts pooled across images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OcrCounts {
    pub matched: u64,
    pub predictions: u64,
    pub ground_truths: u64,
}

impl OcrCounts {
    pub fn for_image(preds: &[WordAnnotation], gts: &[WordAnnotation], cfg: &MatchConfig) -> Self {
        Self {
            matched: match_words(preds, gts, cfg).len() as u64,
            predictions: preds.len() as u64,
            ground_truths: gts.len() as u64,
        }
    }

    pub fn prf(&self) -> Prf {
        let precision =
            if self.predictions == 0 { 1.0 } else { self.matched as f64 / self.predictions as f64 };
        let recall =
            if self.ground_truths == 0 { 1.0 } else { self.matched as f64 / self.ground_truths as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf { precision, recall, f1 }
    }
}

impl Add for OcrCounts {
    type Output = OcrCounts;

    fn add(self, o: OcrCounts) -> OcrCounts {
        OcrCounts {
            matched: self.matched + o.matched,
            predictions: self.predictions + o.predictions,
            ground_truths: self.ground_truths + o.ground_truths,
        }
    }
}

impl AddAssign for OcrCounts {
    fn add_assign(&mut self, o: OcrCounts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 for one image under the default protocol.
/// With no predictions, precision is 1 by convention.
pub fn ocr_prf(preds: &[WordAnnotation], gts: &[WordAnnotation]) -> Prf {
    OcrCounts::for_image(preds, gts, &MatchConfig::default()).prf()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(x0: f64, y0: f64, x1: f64, y1: f64, t: &str) -> WordAnnotation {
        WordAnnotation::new(Box2D::new(x0, y0, x1, y1).unwrap(), t)
    }

    #[test]
    fn exact_single_match() {
        let a = [w(0.1, 0.1, 0.3, 0.2, "Hello")];
        assert_eq!(match_words(&a, &a, &MatchConfig::default()), vec![(0, 0)]);
    }

    #[test]
    fn threshold_boundary() {
        // gt 0..1 x 0..1; pred 0..0.49 gives IoU 0.49, 0..0.5 gives exactly 0.5
        let gt = [w(0.0, 0.0, 1.0, 1.0, "a")];
        assert!(match_words(&[w(0.0, 0.0, 0.49, 1.0, "a")], &gt, &MatchConfig::default()).is_empty());
        assert_eq!(match_words(&[w(0.0, 0.0, 0.5, 1.0, "a")], &gt, &MatchConfig::default()).len(), 1);
    }

    #[test]
    fn case_is_not_normalized() {
        let gt = [w(0.0, 0.0, 1.0, 1.0, "cat")];
        let pred = [w(0.0, 0.0, 0.9, 1.0, "Cat")];
        assert!(match_words(&pred, &gt, &MatchConfig::default()).is_empty());
        let punct = [w(0.0, 0.0, 1.0, 1.0, "cat.")];
        assert!(match_words(&punct, &gt, &MatchConfig::default()).is_empty());
    }

    #[test]
    fn empty_prediction_text_never_matches() {
        let gt = [w(0.0, 0.0, 1.0, 1.0, "")];
        assert!(match_words(&gt, &gt, &MatchConfig::default()).is_empty());
    }

    #[test]
    fn prf_examples() {
        let gts = [w(0.0, 0.0, 0.2, 0.2, "a"), w(0.3, 0.3, 0.5, 0.5, "b"), w(0.6, 0.6, 0.9, 0.9, "c")];
        assert_eq!(ocr_prf(&gts, &gts), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });

        let r = ocr_prf(&gts[..1], &gts[..2]);
        assert_eq!((r.precision, r.recall), (1.0, 0.5));
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);

        assert_eq!(ocr_prf(&[], &gts[..2]), Prf { precision: 1.0, recall: 0.0, f1: 0.0 });
        assert_eq!(ocr_prf(&[], &[]), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn greedy_can_lose_to_maximum() {
        // p0 overlaps both gts (better with g0); p1 overlaps only g0.
        let gts = [w(0.0, 0.0, 0.4, 1.0, "x"), w(0.1, 0.0, 0.5, 1.0, "x")];
        let preds = [w(0.02, 0.0, 0.42, 1.0, "x"), w(0.0, 0.0, 0.38, 1.0, "x")];
        let greedy = match_words(&preds, &gts, &MatchConfig::default());
        let max = match_words(&preds, &gts, &MatchConfig { mode: MatchMode::Maximum, ..Default::default() });
        assert_eq!(max.len(), 2);
        assert!(greedy.len() <= max.len());
    }

    #[test]
    fn greedy_prefers_higher_iou_then_lower_index() {
        let gts = [w(0.0, 0.0, 0.5, 0.5, "x"), w(0.0, 0.0, 0.5, 0.5, "x")];
        let preds = [w(0.0, 0.0, 0.5, 0.5, "x")];
        assert_eq!(match_words(&preds, &gts, &MatchConfig::default()), vec![(0, 0)]);
    }

    #[test]
    fn counts_pool() {
        let a = OcrCounts { matched: 1, predictions: 2, ground_truths: 1 };
        let b = OcrCounts { matched: 3, predictions: 3, ground_truths: 5 };
        let total = a + b;
        assert_eq!(total, OcrCounts { matched: 4, predictions: 5, ground_truths: 6 });
        assert_eq!(total.prf().precision, 0.8);
    }

    #[test]
    fn polygon_reduction() {
        let word = WordAnnotation::from_polygon(&[(0.2, 0.1), (0.6, 0.15), (0.55, 0.4), (0.25, 0.3)], "w").unwrap();
        assert_eq!(word.bbox.to_array(), [0.2, 0.1, 0.6, 0.4]);
        assert!(WordAnnotation::from_polygon(&[], "w").is_none());
    }
}
