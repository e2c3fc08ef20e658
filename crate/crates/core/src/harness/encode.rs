//! Dataset encoding to training targets, and decoding of raw model output.

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::eval::{decode_text, frame_box};
use super::formats::{DetectRecord, ObjectRecord, TableRecord};
use super::{HarnessError, Task};
use crate::codec::{encode_detection_target, CoordOrder, DetectionInstance};
use crate::geometry::{PadTransform, PixelBox};
use crate::table::{
    parse_table_html_with, render_table_html, validate_table_example, TableParseOptions, ValidationConfig, Validity,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeConfig {
    /// `None` picks the task default.
    pub coord_order: Option<CoordOrder>,
    /// Suffix capacity in tokens for detection targets.
    pub max_suffix_len: usize,
    pub seed: u64,
    pub validation: ValidationConfig,
    pub fill_missing_cells: bool,
}

pub const DEFAULT_MAX_SUFFIX_LEN: usize = 500;

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            coord_order: None,
            max_suffix_len: DEFAULT_MAX_SUFFIX_LEN,
            seed: 0,
            validation: ValidationConfig::default(),
            fill_missing_cells: false,
        }
    }
}

impl EncodeConfig {
    fn order(&self, task: Task) -> CoordOrder {
        self.coord_order.unwrap_or(match task {
            Task::Table => CoordOrder::TABLE_DEFAULT,
            _ => CoordOrder::DETECTION_DEFAULT,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EncodeSummary {
    pub written: u64,
    /// `(id, reason)` of every skipped record, in input order.
    pub skipped: Vec<(String, String)>,
}

/// Per-example seed, so an example's target does not depend on where it
/// sits in the file.
pub fn example_seed(seed: u64, id: &str) -> u64 {
    let digest = Sha256::new().chain_update(seed.to_le_bytes()).chain_update(id.as_bytes()).finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

fn line(value: serde_json::Value) -> String {
    let mut s = serde_json::to_string(&value).expect("json values always serialize");
    s.push('\n');
    s
}

/// One JSONL line per record: `{"id", "prefix", "suffix", "loss_mask"}`, the
/// mask as a string of `1` (loss) and `0` (no loss) per suffix token.
pub fn encode_detection_dataset(records: &[DetectRecord], cfg: &EncodeConfig) -> Result<(String, EncodeSummary), HarnessError> {
    let order = cfg.order(Task::Detect);
    let mut out = String::new();
    let mut summary = EncodeSummary::default();
    for rec in records {
        let invalid = |message: String| HarnessError::InvalidExample { id: rec.id.clone(), message };
        let objects = rec.objects.as_ref().ok_or_else(|| invalid("record needs `objects`".into()))?;
        let instances = objects
            .iter()
            .map(|o| {
                let bbox = frame_box(o.bbox, rec.image).map_err(&invalid)?;
                DetectionInstance::new(bbox, o.label.clone(), None).map_err(|e| invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sample = encode_detection_target(&instances, cfg.max_suffix_len, order, example_seed(cfg.seed, &rec.id))
            .map_err(|source| HarnessError::Codec { id: rec.id.clone(), source })?;
        let mask: String = sample.loss_mask.iter().map(|&m| if m { '1' } else { '0' }).collect();
        out.push_str(&line(json!({
            "id": rec.id,
            "prefix": sample.prefix,
            "suffix": sample.render_suffix(),
            "loss_mask": mask,
        })));
        summary.written += 1;
    }
    Ok((out, summary))
}

/// One JSONL line per kept record: `{"id", "html"}` with `coords` attributes.
/// Records with invalid structure, boxes outside the frame or overlapping
/// cell boxes are skipped and logged.
pub fn encode_table_dataset(records: &[TableRecord], cfg: &EncodeConfig) -> Result<(String, EncodeSummary), HarnessError> {
    let order = cfg.order(Task::Table);
    let opts = TableParseOptions { order, fill_missing_cells: cfg.fill_missing_cells };
    let mut out = String::new();
    let mut summary = EncodeSummary::default();
    for rec in records {
        let invalid = |message: String| HarnessError::InvalidExample { id: rec.id.clone(), message };
        let mut skip = |reason: String| {
            log::warn!("skipping table {}: {reason}", rec.id);
            summary.skipped.push((rec.id.clone(), reason));
        };
        let mut grid = match parse_table_html_with(&rec.html, &opts) {
            Ok(g) => g,
            Err(e) => {
                skip(e.to_string());
                continue;
            }
        };
        let size = rec.image.map(|d| d.size().map_err(&invalid)).transpose()?;
        if let Some(boxes) = &rec.cell_boxes {
            let size = size.ok_or_else(|| invalid("`cell_boxes` needs `image`".into()))?;
            if boxes.len() != grid.cells().len() {
                return Err(invalid(format!("{} cell boxes for {} cells", boxes.len(), grid.cells().len())));
            }
            let transform = PadTransform::new(size, cfg.validation.anchor);
            let mut out_of_frame = None;
            for (cell, b) in boxes.iter().enumerate() {
                let Some(b) = b else { continue };
                match transform.pad(&PixelBox::new(b[0], b[1], b[2], b[3])) {
                    Ok(unit) => grid.set_box(cell, Some(unit)),
                    Err(e) => {
                        out_of_frame = Some(format!("cell {cell}: {e}"));
                        break;
                    }
                }
            }
            if let Some(reason) = out_of_frame {
                skip(reason);
                continue;
            }
        }
        if let Some(size) = size {
            if let Validity::Skip(reason) = validate_table_example(&grid, size, &cfg.validation) {
                skip(reason.to_string());
                continue;
            }
        }
        out.push_str(&line(json!({"id": rec.id, "html": render_table_html(&grid, order)})));
        summary.written += 1;
    }
    Ok((out, summary))
}

/// Decodes the `text` of each record into `{"id", "detections"}` in the
/// structured prediction format. Undecodable output yields no detections and
/// an `"error"` field.
pub fn decode_detection_text(records: &[DetectRecord], order: CoordOrder) -> Result<String, HarnessError> {
    let mut out = String::new();
    for rec in records {
        let text = rec.text.as_ref().ok_or_else(|| HarnessError::InvalidExample {
            id: rec.id.clone(),
            message: "record needs `text`".into(),
        })?;
        match decode_text(text, rec.token_probs.as_deref(), order) {
            Ok(found) => {
                let detections: Vec<ObjectRecord> = found
                    .into_iter()
                    .map(|(label, bbox, score)| ObjectRecord { bbox: bbox.to_array(), label, score: Some(score) })
                    .collect();
                out.push_str(&line(json!({"id": rec.id, "detections": detections})));
            }
            Err(reason) => {
                log::warn!("record {} is not decodable: {reason}", rec.id);
                out.push_str(&line(json!({"id": rec.id, "detections": [], "error": reason})));
            }
        }
    }
    Ok(out)
}
