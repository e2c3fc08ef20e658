//! Seeded random inputs for oracle cross-checks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::codec::DetectionInstance;
use crate::geometry::Box2D;
use crate::metrics::detect::{GroundTruthBox, ScoredDetection};
use crate::metrics::ocr::WordAnnotation;
use crate::metrics::ted::LabeledTree;
use crate::table::{TableCell, TableGrid};

/// Random ordered tree with `1..=max_nodes` nodes: each new node becomes the
/// last child of a uniformly chosen existing node.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize, alphabet: &[char]) -> LabeledTree<char> {
    let n = rng.gen_range(1..=max_nodes);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 1..n {
        children[rng.gen_range(0..v)].push(v);
    }
    let labels: Vec<char> = (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect();
    fn build(v: usize, children: &[Vec<usize>], labels: &[char]) -> LabeledTree<char> {
        LabeledTree::node(labels[v], children[v].iter().map(|&c| build(c, children, labels)).collect())
    }
    build(0, &children, &labels)
}

/// Random table of `1..=max_rows` x `1..=max_cols` slots with spans,
/// header rows and short texts drawn from `texts`.
pub fn random_grid<R: Rng>(rng: &mut R, max_rows: usize, max_cols: usize, texts: &[&str]) -> TableGrid {
    let rows = rng.gen_range(1..=max_rows);
    let cols = rng.gen_range(1..=max_cols);
    let mut taken = vec![vec![false; cols]; rows];
    let mut out: Vec<Vec<TableCell>> = vec![Vec::new(); rows];
    for r in 0..rows {
        for c in 0..cols {
            if taken[r][c] {
                continue;
            }
            // mostly 1x1 so that spans stay interesting rather than dominant
            let want_rs = if rng.gen_bool(0.25) { rng.gen_range(1..=rows - r) } else { 1 };
            let want_cs = if rng.gen_bool(0.25) { rng.gen_range(1..=cols - c) } else { 1 };
            let cs = (1..=want_cs).take_while(|&cs| !taken[r][c + cs - 1]).last().unwrap();
            let rs = want_rs;
            for row in taken.iter_mut().skip(r).take(rs) {
                for slot in row.iter_mut().skip(c).take(cs) {
                    *slot = true;
                }
            }
            let text = *texts.choose(rng).unwrap();
            out[r].push(TableCell::new(text).with_span(rs as u32, cs as u32));
        }
    }
    let head = if rng.gen_bool(0.3) { rng.gen_range(0..=rows) } else { 0 };
    TableGrid::from_rows(out, head).expect("generated layouts are rectangular")
}

fn jitter<R: Rng>(rng: &mut R, b: &Box2D, amount: f64) -> Box2D {
    let [x0, y0, x1, y1] = b.to_array();
    let mut d = || rng.gen_range(-amount..=amount);
    Box2D::from_corners_clamped(x0 + d(), y0 + d(), x1 + d(), y1 + d())
}

fn random_box<R: Rng>(rng: &mut R, min_side: f64, max_side: f64) -> Box2D {
    let w = rng.gen_range(min_side..max_side);
    let h = rng.gen_range(min_side..max_side);
    let x = rng.gen_range(0.0..1.0 - w);
    let y = rng.gen_range(0.0..1.0 - h);
    Box2D::new(x, y, x + w, y + h).unwrap()
}

/// One image worth of OCR words: `0..=max_words` per side. Predictions mostly
/// perturb ground-truth words (box jitter, occasional text change) and words
/// cluster around a few anchors so that one prediction often has several
/// admissible partners.
pub fn random_ocr_scene<R: Rng>(rng: &mut R, max_words: usize) -> (Vec<WordAnnotation>, Vec<WordAnnotation>) {
    let vocab = ["a", "b", "ab"];
    let anchors: Vec<Box2D> = (0..rng.gen_range(1..=3)).map(|_| random_box(rng, 0.1, 0.3)).collect();
    let n_gt = rng.gen_range(0..=max_words);
    let gts: Vec<WordAnnotation> = (0..n_gt)
        .map(|_| {
            let anchor = anchors.choose(rng).unwrap();
            WordAnnotation::new(jitter(rng, anchor, 0.04), *vocab.choose(rng).unwrap())
        })
        .collect();
    let n_pred = rng.gen_range(0..=max_words);
    let preds = (0..n_pred)
        .map(|_| {
            if !gts.is_empty() && rng.gen_bool(0.8) {
                let src = gts.choose(rng).unwrap();
                let text = if rng.gen_bool(0.8) { src.transcription.clone() } else { vocab.choose(rng).unwrap().to_string() };
                WordAnnotation::new(jitter(rng, &src.bbox, 0.04), text)
            } else {
                WordAnnotation::new(random_box(rng, 0.05, 0.3), *vocab.choose(rng).unwrap())
            }
        })
        .collect();
    (preds, gts)
}

/// Small multi-image, multi-class detection scene. Scores are multiples of
/// 0.1 so ties occur.
pub fn random_detection_scene<R: Rng>(rng: &mut R) -> (Vec<ScoredDetection>, Vec<GroundTruthBox>) {
    let classes = ["cat", "dog", "traffic light"];
    let n_images = rng.gen_range(1..=3);
    let mut gts = Vec::new();
    let mut dets = Vec::new();
    for image in 0..n_images {
        for _ in 0..rng.gen_range(0..=4) {
            gts.push(GroundTruthBox {
                image,
                class: classes.choose(rng).unwrap().to_string(),
                bbox: random_box(rng, 0.1, 0.5),
            });
        }
    }
    for _ in 0..rng.gen_range(0..=12) {
        let score = f64::from(rng.gen_range(0..=10u32)) / 10.0;
        let det = match gts.choose(rng) {
            Some(g) if rng.gen_bool(0.75) => {
                let class = if rng.gen_bool(0.85) { g.class.clone() } else { classes.choose(rng).unwrap().to_string() };
                ScoredDetection { image: g.image, class, bbox: jitter(rng, &g.bbox, 0.05), score }
            }
            _ => ScoredDetection {
                image: rng.gen_range(0..n_images),
                class: classes.choose(rng).unwrap().to_string(),
                bbox: random_box(rng, 0.05, 0.5),
                score,
            },
        };
        dets.push(det);
    }
    (dets, gts)
}

/// `0..=max` labelled boxes with arbitrary real coordinates.
pub fn random_instances<R: Rng>(rng: &mut R, max: usize) -> Vec<DetectionInstance> {
    let labels = ["cat", "dog", "traffic light", "person"];
    (0..rng.gen_range(0..=max))
        .map(|_| {
            let (a, b, c, d) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            let bbox = Box2D::from_corners_clamped(a.min(c), b.min(d), a.max(c), b.max(d));
            DetectionInstance::new(bbox, *labels.choose(rng).unwrap(), None).unwrap()
        })
        .collect()
}
