//! Deterministic workloads shared by the benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tokeval_core::codec::DetectionInstance;
use tokeval_core::metrics::detect::{GroundTruthBox, ScoredDetection};
use tokeval_core::metrics::ocr::WordAnnotation;
use tokeval_core::table::{TableCell, TableGrid};
use tokeval_core::Box2D;

const VOCAB: [&str; 8] = ["total", "net", "2021", "2022", "revenue", "cost", "-", "12.5"];

fn random_box(rng: &mut ChaCha8Rng, w: f64, h: f64) -> Box2D {
    let (x, y) = (rng.gen_range(0.0..1.0 - w), rng.gen_range(0.0..1.0 - h));
    Box2D::new(x, y, x + w, y + h).unwrap()
}

/// A `rows` x `cols` table and a copy with a few cells edited and one row dropped.
pub fn table_pair(rows: usize, cols: usize, seed: u64) -> (TableGrid, TableGrid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<Vec<TableCell>> = (0..rows)
        .map(|_| (0..cols).map(|_| TableCell::new(*VOCAB.choose(&mut rng).unwrap())).collect())
        .collect();
    let mut edited = cells.clone();
    for _ in 0..(rows * cols / 10).max(1) {
        let (r, c) = (rng.gen_range(0..rows), rng.gen_range(0..cols));
        edited[r][c] = TableCell::new(*VOCAB.choose(&mut rng).unwrap());
    }
    if rows > 1 {
        edited.remove(rng.gen_range(0..rows));
    }
    (TableGrid::from_rows(cells, 1).unwrap(), TableGrid::from_rows(edited, 1).unwrap())
}

/// Predicted and ground-truth words for one page, predictions jittered.
pub fn ocr_page(words: usize, seed: u64) -> (Vec<WordAnnotation>, Vec<WordAnnotation>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gts: Vec<WordAnnotation> =
        (0..words).map(|_| WordAnnotation::new(random_box(&mut rng, 0.06, 0.02), *VOCAB.choose(&mut rng).unwrap())).collect();
    let preds = gts
        .iter()
        .map(|g| {
            let d: f64 = rng.gen_range(-0.005..0.005);
            let b = Box2D::from_corners_clamped(g.bbox.x_min() + d, g.bbox.y_min(), g.bbox.x_max(), g.bbox.y_max());
            WordAnnotation::new(b, if rng.gen_bool(0.9) { g.transcription.clone() } else { "?".into() })
        })
        .collect();
    (preds, gts)
}

pub fn token_pair(len: usize, seed: u64) -> (Vec<u32>, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<u32> = (0..len).map(|_| rng.gen_range(0..50)).collect();
    let b = a.iter().map(|&t| if rng.gen_bool(0.1) { rng.gen_range(0..50) } else { t }).collect();
    (a, b)
}

pub fn detection_scene(images: usize, per_image: usize, seed: u64) -> (Vec<ScoredDetection>, Vec<GroundTruthBox>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = ["cat", "dog", "person", "car"];
    let mut dets = Vec::new();
    let mut gts = Vec::new();
    for image in 0..images {
        for _ in 0..per_image {
            let class = classes.choose(&mut rng).unwrap().to_string();
            let bbox = random_box(&mut rng, 0.2, 0.2);
            gts.push(GroundTruthBox { image, class: class.clone(), bbox });
            let d: f64 = rng.gen_range(-0.03..0.03);
            let moved = Box2D::from_corners_clamped(bbox.x_min() + d, bbox.y_min(), bbox.x_max() + d, bbox.y_max());
            dets.push(ScoredDetection { image, class, bbox: moved, score: rng.gen() });
        }
    }
    (dets, gts)
}

pub fn instances(n: usize, seed: u64) -> Vec<DetectionInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| DetectionInstance::new(random_box(&mut rng, 0.1, 0.3), "traffic light", None).unwrap()).collect()
}
