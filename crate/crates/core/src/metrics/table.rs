//! Table similarity: TEDS / S-TEDS over HTML trees and GriTS-Top / GriTS-Con
//! over span-expanded grids.

use serde::{Deserialize, Serialize};

use super::seq::normalized_edit_distance;
use super::ted::{tree_edit_distance, CostModel, LabeledTree};
use crate::table::TableGrid;

/// Node of the HTML tree built from a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableNode {
    Table,
    Head,
    Body,
    Row,
    /// `<td>` and `<th>` alike; text is `None` when content is ignored.
    Cell { rowspan: u32, colspan: u32, text: Option<String> },
}

/// Collapses whitespace runs and trims.
pub fn normalize_cell_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `table -> [thead] -> tbody -> tr -> td`, one section node per non-empty
/// section, cells under the row that holds their top-left slot.
pub fn table_tree(grid: &TableGrid, structure_only: bool) -> LabeledTree<TableNode> {
    let row_cells = grid.row_cells();
    let row = |r: usize| {
        let cells = row_cells[r]
            .iter()
            .map(|&i| {
                let c = &grid.cells()[i];
                LabeledTree::leaf(TableNode::Cell {
                    rowspan: c.rowspan,
                    colspan: c.colspan,
                    text: (!structure_only).then(|| normalize_cell_text(&c.text)),
                })
            })
            .collect();
        LabeledTree::node(TableNode::Row, cells)
    };
    let mut sections = Vec::new();
    if grid.head_rows() > 0 {
        sections.push(LabeledTree::node(TableNode::Head, (0..grid.head_rows()).map(row).collect()));
    }
    if grid.rows() > grid.head_rows() {
        sections.push(LabeledTree::node(TableNode::Body, (grid.head_rows()..grid.rows()).map(row).collect()));
    }
    LabeledTree::node(TableNode::Table, sections)
}

/// Relabel cost 1 across node kinds or spans; between cells, the normalized
/// character edit distance of their text.
#[derive(Debug, Clone, Copy, Default)]
pub struct TedsCost;

impl CostModel<TableNode> for TedsCost {
    fn relabel(&self, a: &TableNode, b: &TableNode) -> f64 {
        match (a, b) {
            (
                TableNode::Cell { rowspan: ra, colspan: ca, text: ta },
                TableNode::Cell { rowspan: rb, colspan: cb, text: tb },
            ) => {
                if ra != rb || ca != cb {
                    1.0
                } else {
                    match (ta, tb) {
                        (Some(x), Some(y)) => normalized_edit_distance(x, y),
                        _ => 0.0,
                    }
                }
            }
            _ if a == b => 0.0,
            _ => 1.0,
        }
    }
}

/// `1 - TED / max(|tree(a)|, |tree(b)|)`; `structure_only` gives S-TEDS.
pub fn teds(a: &TableGrid, b: &TableGrid, structure_only: bool) -> f64 {
    let (ta, tb) = (table_tree(a, structure_only), table_tree(b, structure_only));
    let denom = ta.size().max(tb.size()) as f64;
    let dist = tree_edit_distance(&ta, &tb, &TedsCost);
    (1.0 - dist / denom).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GritsFlavor {
    /// Cell topology: IoU of span rectangles relative to each slot.
    Top,
    /// Cell content: `2 * LCS / (|s| + |t|)` of slot texts.
    Con,
}

/// Per-slot payload for one flavor.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotValue {
    Rect([f64; 4]),
    Text(Vec<char>),
}

/// Grid of slot payloads, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<SlotValue>,
}

impl SlotMatrix {
    pub fn from_grid(grid: &TableGrid, flavor: GritsFlavor) -> Self {
        let mut values = Vec::with_capacity(grid.slot_count());
        for r in 0..grid.rows() {
            for c in 0..grid.cols() {
                let id = grid.cell_at(r, c);
                let cell = &grid.cells()[id];
                values.push(match flavor {
                    GritsFlavor::Top => {
                        let (r0, c0) = grid.origins()[id];
                        let (dr, dc) = (r0 as f64 - r as f64, c0 as f64 - c as f64);
                        SlotValue::Rect([dc, dr, dc + f64::from(cell.colspan), dr + f64::from(cell.rowspan)])
                    }
                    GritsFlavor::Con => SlotValue::Text(normalize_cell_text(&cell.text).chars().collect()),
                });
            }
        }
        Self { rows: grid.rows(), cols: grid.cols(), values }
    }

    pub fn get(&self, r: usize, c: usize) -> &SlotValue {
        &self.values[r * self.cols + c]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rect_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let w = a[2].min(b[2]) - a[0].max(b[0]);
    let h = a[3].min(b[3]) - a[1].max(b[1]);
    let inter = if w > 0.0 && h > 0.0 { w * h } else { 0.0 };
    let area = |r: &[f64; 4]| (r[2] - r[0]) * (r[3] - r[1]);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Similarity of two slot payloads in `[0, 1]`.
pub fn slot_similarity(a: &SlotValue, b: &SlotValue) -> f64 {
    match (a, b) {
        (SlotValue::Rect(x), SlotValue::Rect(y)) => rect_iou(x, y),
        (SlotValue::Text(x), SlotValue::Text(y)) => {
            if x.is_empty() && y.is_empty() {
                1.0
            } else {
                2.0 * lcs_len(x, y) as f64 / (x.len() + y.len()) as f64
            }
        }
        _ => 0.0,
    }
}

/// Best order-preserving alignment of `n` against `m` items under `score`,
/// gaps scoring 0. Returns the total and the aligned index pairs.
fn align(n: usize, m: usize, score: impl Fn(usize, usize) -> f64) -> (f64, Vec<(usize, usize)>) {
    let mut dp = vec![vec![0.0f64; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            dp[i][j] = (dp[i - 1][j - 1] + score(i - 1, j - 1)).max(dp[i - 1][j]).max(dp[i][j - 1]);
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        if dp[i][j] == dp[i - 1][j] {
            i -= 1;
        } else if dp[i][j] == dp[i][j - 1] {
            j -= 1;
        } else {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        }
    }
    pairs.reverse();
    (dp[n][m], pairs)
}

/// GriTS components: `f = 2S / (|A| + |B|)`, `precision = S / |A|`,
/// `recall = S / |B|`, with `A` the prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GritsScore {
    pub substructure_score: f64,
    pub f: f64,
    pub precision: f64,
    pub recall: f64,
}

impl GritsScore {
    fn new(s: f64, a: usize, b: usize) -> Self {
        if a + b == 0 {
            return Self { substructure_score: 0.0, f: 1.0, precision: 1.0, recall: 1.0 };
        }
        Self {
            substructure_score: s,
            f: (2.0 * s / (a + b) as f64).clamp(0.0, 1.0),
            precision: if a == 0 { 0.0 } else { (s / a as f64).clamp(0.0, 1.0) },
            recall: if b == 0 { 0.0 } else { (s / b as f64).clamp(0.0, 1.0) },
        }
    }
}

/// Factored approximation of the most similar common 2D substructure.
///
/// Rows are aligned using, as the score of each row pair, the best 1D
/// alignment of their slots; columns are aligned the same way. The returned
/// score sums slot similarities over the resulting rows x columns
/// substructure, so it never exceeds the exact optimum. The two alignments
/// are then refined alternately until the total stops improving. Both
/// argument orders are tried (alignment ties break differently) and the
/// better one is kept.
pub fn factored_substructure(a: &SlotMatrix, b: &SlotMatrix) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    factored_one_way(a, b).max(factored_one_way(b, a))
}

fn factored_one_way(a: &SlotMatrix, b: &SlotMatrix) -> f64 {
    let (_, row_pairs) = align(a.rows, b.rows, |i, k| {
        align(a.cols, b.cols, |j, l| slot_similarity(a.get(i, j), b.get(k, l))).0
    });
    let (_, mut col_pairs) = align(a.cols, b.cols, |j, l| {
        align(a.rows, b.rows, |i, k| slot_similarity(a.get(i, j), b.get(k, l))).0
    });
    let mut best = substructure_total(a, b, &row_pairs, &col_pairs);
    // Alternate: realign rows against the current columns, then columns
    // against the current rows. Each step keeps the previous alignment
    // available, so the total never drops.
    for _ in 0..MAX_REFINEMENT_ROUNDS {
        let (_, rows) = align(a.rows, b.rows, |i, k| {
            col_pairs.iter().map(|&(j, l)| slot_similarity(a.get(i, j), b.get(k, l))).sum()
        });
        let (_, cols) = align(a.cols, b.cols, |j, l| {
            rows.iter().map(|&(i, k)| slot_similarity(a.get(i, j), b.get(k, l))).sum()
        });
        let total = substructure_total(a, b, &rows, &cols);
        if total <= best {
            break;
        }
        best = total;
        col_pairs = cols;
    }
    best
}

const MAX_REFINEMENT_ROUNDS: usize = 16;

fn substructure_total(a: &SlotMatrix, b: &SlotMatrix, rows: &[(usize, usize)], cols: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for &(i, k) in rows {
        for &(j, l) in cols {
            total += slot_similarity(a.get(i, j), b.get(k, l));
        }
    }
    total
}

pub fn grits_score(pred: &TableGrid, gt: &TableGrid, flavor: GritsFlavor) -> GritsScore {
    let (a, b) = (SlotMatrix::from_grid(pred, flavor), SlotMatrix::from_grid(gt, flavor));
    GritsScore::new(factored_substructure(&a, &b), a.len(), b.len())
}

/// `2 S(A, B) / (|A| + |B|)`; 1 for two empty grids.
pub fn grits(a: &TableGrid, b: &TableGrid, flavor: GritsFlavor) -> f64 {
    grits_score(a, b, flavor).f
}
