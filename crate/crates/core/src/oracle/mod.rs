//! Slow reference implementations used to cross-check the production metrics.
//!
//! Everything here favours obviousness over speed: exhaustive enumeration,
//! naive recursion, and geometry recomputed from scratch rather than shared
//! with the code under test. Built for tests and behind the `oracles` feature.

pub mod gen;

use std::collections::BTreeSet;

use crate::geometry::Box2D;
use crate::metrics::detect::{GroundTruthBox, ScoredDetection};
use crate::metrics::ocr::WordAnnotation;
use crate::metrics::ted::{CostModel, LabeledTree};
use crate::table::TableGrid;

fn overlap_ratio(a: &Box2D, b: &Box2D) -> f64 {
    let [ax0, ay0, ax1, ay1] = a.to_array();
    let [bx0, by0, bx1, by1] = b.to_array();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

// ---------------------------------------------------------------- edit distance

/// Plain three-way recursion, no memo. Exponential; keep inputs short.
pub fn recursive_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = recursive_levenshtein(ra, rb) + usize::from(x != y);
            let del = recursive_levenshtein(ra, b) + 1;
            let ins = recursive_levenshtein(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

// ---------------------------------------------------------- tree edit distance

struct Flat<'a, L> {
    labels: Vec<&'a L>,
    /// One past the last preorder index of each node's subtree.
    end: Vec<usize>,
}

impl<'a, L> Flat<'a, L> {
    fn new(t: &'a LabeledTree<L>) -> Self {
        let mut f = Flat { labels: Vec::new(), end: Vec::new() };
        f.visit(t);
        f
    }

    fn visit(&mut self, t: &'a LabeledTree<L>) {
        let me = self.labels.len();
        self.labels.push(&t.label);
        self.end.push(0);
        for c in &t.children {
            self.visit(c);
        }
        self.end[me] = self.labels.len();
    }

    fn is_ancestor(&self, u: usize, v: usize) -> bool {
        u < v && v < self.end[u]
    }
}

/// Minimum edit-script cost by enumerating every valid mapping between the
/// two node sets (one-to-one, preserving ancestry and left-to-right order).
pub fn brute_tree_edit_distance<L, C: CostModel<L>>(a: &LabeledTree<L>, b: &LabeledTree<L>, cost: &C) -> f64 {
    let (fa, fb) = (Flat::new(a), Flat::new(b));
    let mut best = f64::INFINITY;
    let mut pairs = Vec::new();
    let mut used = vec![false; fb.labels.len()];
    enumerate_mappings(&fa, &fb, cost, 0, &mut pairs, &mut used, 0.0, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate_mappings<L, C: CostModel<L>>(
    fa: &Flat<'_, L>,
    fb: &Flat<'_, L>,
    cost: &C,
    i: usize,
    pairs: &mut Vec<(usize, usize)>,
    used: &mut [bool],
    acc: f64,
    best: &mut f64,
) {
    if i == fa.labels.len() {
        let inserts: f64 = (0..fb.labels.len()).filter(|&j| !used[j]).map(|j| cost.insert(fb.labels[j])).sum();
        *best = best.min(acc + inserts);
        return;
    }
    enumerate_mappings(fa, fb, cost, i + 1, pairs, used, acc + cost.delete(fa.labels[i]), best);
    for j in 0..fb.labels.len() {
        if used[j] {
            continue;
        }
        // earlier pairs have p < i, so they need q < j and matching ancestry
        let ok = pairs.iter().all(|&(p, q)| q < j && fa.is_ancestor(p, i) == fb.is_ancestor(q, j));
        if !ok {
            continue;
        }
        used[j] = true;
        pairs.push((i, j));
        let relabel = cost.relabel(fa.labels[i], fb.labels[j]);
        enumerate_mappings(fa, fb, cost, i + 1, pairs, used, acc + relabel, best);
        pairs.pop();
        used[j] = false;
    }
}

// ----------------------------------------------------------------------- GriTS

/// Which per-slot comparison the exhaustive GriTS search uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Topology,
    Content,
}

enum Slot {
    /// Cell rectangle relative to the slot, in integer slot units.
    Rect(i64, i64, i64, i64),
    Text(Vec<char>),
}

fn slots(grid: &TableGrid, kind: SlotKind) -> Vec<Vec<Slot>> {
    (0..grid.rows())
        .map(|r| {
            (0..grid.cols())
                .map(|c| {
                    let id = grid.cell_at(r, c);
                    let cell = &grid.cells()[id];
                    match kind {
                        SlotKind::Topology => {
                            let (r0, c0) = grid.origins()[id];
                            let (x0, y0) = (c0 as i64 - c as i64, r0 as i64 - r as i64);
                            Slot::Rect(x0, y0, x0 + i64::from(cell.colspan), y0 + i64::from(cell.rowspan))
                        }
                        SlotKind::Content => {
                            let words: Vec<&str> = cell.text.split_whitespace().collect();
                            Slot::Text(words.join(" ").chars().collect())
                        }
                    }
                })
                .collect()
        })
        .collect()
}

fn lcs(a: &[char], b: &[char]) -> usize {
    match (a.split_last(), b.split_last()) {
        (Some((x, ra)), Some((y, rb))) if x == y => lcs(ra, rb) + 1,
        (Some((_, ra)), Some((_, rb))) => lcs(ra, b).max(lcs(a, rb)),
        _ => 0,
    }
}

fn slot_sim(a: &Slot, b: &Slot) -> f64 {
    match (a, b) {
        (&Slot::Rect(ax0, ay0, ax1, ay1), &Slot::Rect(bx0, by0, bx1, by1)) => {
            let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0);
            let ih = (ay1.min(by1) - ay0.max(by0)).max(0);
            let inter = iw * ih;
            let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
            inter as f64 / union as f64
        }
        (Slot::Text(x), Slot::Text(y)) if x.is_empty() && y.is_empty() => 1.0,
        (Slot::Text(x), Slot::Text(y)) => 2.0 * lcs(x, y) as f64 / (x.len() + y.len()) as f64,
        _ => unreachable!("both grids use the same slot kind"),
    }
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect()).collect()
}

/// Best total slot similarity over every pair of equally sized row subsets
/// and equally sized column subsets, matched in order. Exponential in the
/// grid dimensions; meant for grids up to about 4 x 4.
pub fn brute_grits_substructure(a: &TableGrid, b: &TableGrid, kind: SlotKind) -> f64 {
    let (sa, sb) = (slots(a, kind), slots(b, kind));
    let (ra, rb, ca, cb) = (subsets(a.rows()), subsets(b.rows()), subsets(a.cols()), subsets(b.cols()));
    let mut best = 0.0f64;
    for rows_a in &ra {
        for rows_b in rb.iter().filter(|s| s.len() == rows_a.len()) {
            for cols_a in &ca {
                for cols_b in cb.iter().filter(|s| s.len() == cols_a.len()) {
                    let mut total = 0.0;
                    for (&i, &k) in rows_a.iter().zip(rows_b) {
                        for (&j, &l) in cols_a.iter().zip(cols_b) {
                            total += slot_sim(&sa[i][j], &sb[k][l]);
                        }
                    }
                    best = best.max(total);
                }
            }
        }
    }
    best
}

/// `2 S / (|A| + |B|)` with the exhaustive `S`; 1 for two empty grids.
pub fn brute_grits(a: &TableGrid, b: &TableGrid, kind: SlotKind) -> f64 {
    let n = a.rows() * a.cols() + b.rows() * b.cols();
    if n == 0 {
        1.0
    } else {
        2.0 * brute_grits_substructure(a, b, kind) / n as f64
    }
}

// ------------------------------------------------------------------------- OCR

/// A prediction and a ground-truth word may be matched: IoU >= threshold and
/// identical non-empty text.
pub fn word_admissible(pred: &WordAnnotation, gt: &WordAnnotation, threshold: f64) -> bool {
    !pred.transcription.is_empty()
        && pred.transcription == gt.transcription
        && overlap_ratio(&pred.bbox, &gt.bbox) >= threshold
}

/// Size of a maximum one-to-one matching, by trying every assignment.
pub fn brute_max_word_matching(preds: &[WordAnnotation], gts: &[WordAnnotation], threshold: f64) -> usize {
    fn go(p: usize, preds: &[WordAnnotation], gts: &[WordAnnotation], t: f64, used: &mut [bool]) -> usize {
        if p == preds.len() {
            return 0;
        }
        let mut best = go(p + 1, preds, gts, t, used);
        for g in 0..gts.len() {
            if !used[g] && word_admissible(&preds[p], &gts[g], t) {
                used[g] = true;
                best = best.max(1 + go(p + 1, preds, gts, t, used));
                used[g] = false;
            }
        }
        best
    }
    go(0, preds, gts, threshold, &mut vec![false; gts.len()])
}

// ------------------------------------------------------------------------- mAP

fn slow_ap(dets: &[ScoredDetection], gts: &[GroundTruthBox], class: &str, t: f64, max_dets: usize) -> f64 {
    let class_gts: Vec<&GroundTruthBox> = gts.iter().filter(|g| g.class == class).collect();
    if class_gts.is_empty() {
        return 0.0;
    }
    // keep the top `max_dets` per image; rank by score, ties by input position
    let mut kept: Vec<(usize, &ScoredDetection)> = Vec::new();
    let images: BTreeSet<usize> = dets.iter().map(|d| d.image).collect();
    for image in images {
        let mut mine: Vec<(usize, &ScoredDetection)> =
            dets.iter().enumerate().filter(|(_, d)| d.image == image && d.class == class).collect();
        mine.sort_by(|x, y| y.1.score.partial_cmp(&x.1.score).unwrap().then(x.0.cmp(&y.0)));
        mine.truncate(max_dets);
        kept.extend(mine);
    }
    kept.sort_by(|x, y| y.1.score.partial_cmp(&x.1.score).unwrap().then(x.0.cmp(&y.0)));

    let mut taken = vec![false; class_gts.len()];
    let mut hits = Vec::new();
    for (_, d) in &kept {
        let mut pick: Option<usize> = None;
        for (g, gt) in class_gts.iter().enumerate() {
            if taken[g] || gt.image != d.image {
                continue;
            }
            let o = overlap_ratio(&d.bbox, &gt.bbox);
            if o >= t && pick.is_none_or(|p| o > overlap_ratio(&d.bbox, &class_gts[p].bbox)) {
                pick = Some(g);
            }
        }
        if let Some(g) = pick {
            taken[g] = true;
        }
        hits.push(pick.is_some());
    }

    // precision at each prefix; interpolated value is the best precision
    // among prefixes reaching the recall level
    let mut curve = Vec::new();
    for k in 1..=hits.len() {
        let tp = hits[..k].iter().filter(|h| **h).count() as f64;
        curve.push((tp / class_gts.len() as f64, tp / k as f64));
    }
    let mut sum = 0.0;
    for i in 0..=100 {
        let level = f64::from(i) / 100.0;
        sum += curve.iter().filter(|(r, _)| *r >= level).map(|(_, p)| *p).fold(0.0, f64::max);
    }
    sum / 101.0
}

/// Mean AP over classes with ground truth and IoU thresholds 0.50..0.95.
pub fn slow_map(dets: &[ScoredDetection], gts: &[GroundTruthBox], max_dets: usize) -> f64 {
    let classes: BTreeSet<&str> = gts.iter().map(|g| g.class.as_str()).collect();
    if classes.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for class in &classes {
        for i in 0..10 {
            sum += slow_ap(dets, gts, class, f64::from(50 + 5 * i) / 100.0, max_dets);
        }
    }
    sum / (10 * classes.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ted::UnitCost;

    #[test]
    fn levenshtein_by_hand() {
        let a: Vec<char> = "kitten".chars().collect();
        let b: Vec<char> = "sitting".chars().collect();
        assert_eq!(recursive_levenshtein(&a, &b), 3);
        assert_eq!(recursive_levenshtein::<char>(&[], &['x']), 1);
    }

    #[test]
    fn brute_ted_by_hand() {
        let l = LabeledTree::leaf;
        let ab = LabeledTree::node('r', vec![l('a'), l('b')]);
        let ba = LabeledTree::node('r', vec![l('b'), l('a')]);
        assert_eq!(brute_tree_edit_distance(&ab, &ba, &UnitCost), 2.0);
        let chain = LabeledTree::node('a', vec![LabeledTree::node('b', vec![l('c')])]);
        assert_eq!(brute_tree_edit_distance(&chain, &LabeledTree::node('a', vec![l('c')]), &UnitCost), 1.0);
        assert_eq!(brute_tree_edit_distance(&l('x'), &l('y'), &UnitCost), 1.0);
    }

    #[test]
    fn brute_grits_identity() {
        let g = crate::table::parse_table_html("<table><tr><td colspan=2>a</td></tr><tr><td>b</td><td>c</td></tr></table>")
            .unwrap();
        assert_eq!(brute_grits(&g, &g, SlotKind::Topology), 1.0);
        assert_eq!(brute_grits(&g, &g, SlotKind::Content), 1.0);
    }
}
