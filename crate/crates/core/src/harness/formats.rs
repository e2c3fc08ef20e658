//! Line-delimited JSON record formats.
//!
//! Every file holds one UTF-8 JSON object per line with a unique `"id"`
//! (string or integer). Blank lines are ignored, unknown fields are ignored.
//!
//! | task            | ground truth                       | prediction                                   |
//! |-----------------|------------------------------------|----------------------------------------------|
//! | ocr             | `words`, optional `image`          | `words`                                      |
//! | table           | `html`, optional `image`           | `html`                                       |
//! | detect          | `objects`, optional `image`        | `detections`, or `text` + optional `token_probs` |
//! | kern/smiles/match | `text`                           | `text`                                       |
//!
//! A word is `{"box": [x0, y0, x1, y1], "text": ..}` or
//! `{"polygon": [[x, y], ..], "text": ..}`. An object is
//! `{"box": [x0, y0, x1, y1], "label": .., "score": ..}` (score only on
//! predictions). `image` is `{"width": w, "height": h}`; when present on a
//! ground-truth record, boxes of that example (both sides) are in pixels,
//! otherwise in normalized `[0, 1]` units.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

use super::HarnessError;
use crate::geometry::{Box2D, ImageSize};

/// Version of the record layout described above.
pub const SCHEMA_VERSION: u32 = 1;

fn id_string<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!("id must be a string or integer, got {other}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

impl ImageDims {
    pub fn size(&self) -> Result<ImageSize, String> {
        ImageSize::new(self.width, self.height).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRecord {
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<Vec<[f64; 2]>>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct OcrRecord {
    #[serde(deserialize_with = "id_string")]
    pub id: String,
    pub words: Vec<WordRecord>,
    #[serde(default)]
    pub image: Option<ImageDims>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TableRecord {
    #[serde(deserialize_with = "id_string")]
    pub id: String,
    pub html: String,
    #[serde(default)]
    pub image: Option<ImageDims>,
    /// Pixel boxes per cell in row-major cell order, for `encode table`.
    #[serde(default)]
    pub cell_boxes: Option<Vec<Option<[f64; 4]>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DetectRecord {
    #[serde(deserialize_with = "id_string")]
    pub id: String,
    #[serde(default)]
    pub objects: Option<Vec<ObjectRecord>>,
    #[serde(default)]
    pub detections: Option<Vec<ObjectRecord>>,
    /// Raw model output in the location-token grammar.
    #[serde(default)]
    pub text: Option<String>,
    /// One probability per parsed token of `text`.
    #[serde(default)]
    pub token_probs: Option<Vec<f64>>,
    #[serde(default)]
    pub image: Option<ImageDims>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TextRecord {
    #[serde(deserialize_with = "id_string")]
    pub id: String,
    pub text: String,
}

pub trait Identified {
    fn id(&self) -> &str;
}

macro_rules! identified {
    ($($t:ty),*) => {$(
        impl Identified for $t {
            fn id(&self) -> &str {
                &self.id
            }
        }
    )*};
}

identified!(OcrRecord, TableRecord, DetectRecord, TextRecord);

/// Parses JSONL text; `origin` names the source in error messages.
pub fn parse_jsonl<T: DeserializeOwned + Identified>(text: &str, origin: &str) -> Result<Vec<T>, HarnessError> {
    let mut out: Vec<T> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(line).map_err(|e| HarnessError::Schema {
            origin: origin.to_string(),
            line: n + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id().to_string()) {
            return Err(HarnessError::DuplicateId { origin: origin.to_string(), id: record.id().to_string() });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned + Identified>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| HarnessError::io(path, e))?);
        text.push('\n');
    }
    parse_jsonl(&text, &path.display().to_string())
}

/// Records keyed by id; iteration order is the id order, independent of the
/// order of lines in the file.
pub fn by_id<T: Identified>(records: Vec<T>) -> BTreeMap<String, T> {
    records.into_iter().map(|r| (r.id().to_string(), r)).collect()
}

/// Normalizes a box given in pixels (when `image` is set) or unit coordinates.
pub fn unit_box(b: [f64; 4], image: Option<ImageDims>) -> Result<Box2D, String> {
    let [x0, y0, x1, y1] = match image {
        Some(d) => {
            let (w, h) = (f64::from(d.width), f64::from(d.height));
            [b[0] / w, b[1] / h, b[2] / w, b[3] / h]
        }
        None => b,
    };
    Box2D::new(x0, y0, x1, y1).map_err(|e| e.to_string())
}

/// Words may slightly exceed the frame in real annotations, so they are
/// clamped rather than rejected.
pub fn word_box(w: &WordRecord, image: Option<ImageDims>) -> Result<Box2D, String> {
    let (w_px, h_px) = image.map_or((1.0, 1.0), |d| (f64::from(d.width), f64::from(d.height)));
    let corners = match (&w.bbox, &w.polygon) {
        (Some(b), None) => *b,
        (None, Some(poly)) if !poly.is_empty() => {
            let xs = poly.iter().map(|p| p[0]);
            let ys = poly.iter().map(|p| p[1]);
            [
                xs.clone().fold(f64::INFINITY, f64::min),
                ys.clone().fold(f64::INFINITY, f64::min),
                xs.fold(f64::NEG_INFINITY, f64::max),
                ys.fold(f64::NEG_INFINITY, f64::max),
            ]
        }
        (Some(_), Some(_)) => return Err("word has both box and polygon".into()),
        _ => return Err("word needs a box or a non-empty polygon".into()),
    };
    if corners.iter().any(|v| !v.is_finite()) {
        return Err("non-finite word coordinate".into());
    }
    if corners[0] > corners[2] || corners[1] > corners[3] {
        return Err(format!("inverted word box {corners:?}"));
    }
    Ok(Box2D::from_corners_clamped(corners[0] / w_px, corners[1] / h_px, corners[2] / w_px, corners[3] / h_px))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_may_be_integers() {
        let recs: Vec<TextRecord> = parse_jsonl("{\"id\": 7, \"text\": \"x\"}\n\n{\"id\": \"b\", \"text\": \"\"}\n", "t").unwrap();
        assert_eq!(recs[0].id, "7");
        assert_eq!(recs.len(), 2);
    }

    #[test]
    fn duplicate_ids_and_bad_lines_are_schema_errors() {
        let dup = parse_jsonl::<TextRecord>("{\"id\":1,\"text\":\"\"}\n{\"id\":\"1\",\"text\":\"\"}", "f");
        assert!(matches!(dup, Err(HarnessError::DuplicateId { .. })));
        let bad = parse_jsonl::<TextRecord>("{\"id\":1}\n", "f");
        assert!(matches!(bad, Err(HarnessError::Schema { line: 1, .. })));
        assert!(bad.unwrap_err().is_schema_error());
    }

    #[test]
    fn box_units() {
        let dims = ImageDims { width: 200, height: 100 };
        assert_eq!(unit_box([20.0, 10.0, 200.0, 100.0], Some(dims)).unwrap().to_array(), [0.1, 0.1, 1.0, 1.0]);
        assert!(unit_box([0.0, 0.0, 1.5, 1.0], None).is_err());
        let poly = WordRecord { bbox: None, polygon: Some(vec![[10.0, 5.0], [30.0, 5.0], [30.0, 20.0]]), text: "a".into() };
        assert_eq!(word_box(&poly, Some(dims)).unwrap().to_array(), [0.05, 0.05, 0.15, 0.2]);
    }
}
