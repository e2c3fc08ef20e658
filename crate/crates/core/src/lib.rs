//! Structured token codecs and evaluation metrics for vision-language transfer tasks.
//!
//! The crate covers three layers:
//!
//! * coordinate geometry and the 1024-bin location quantizer ([`geometry`]),
//! * the `<locDDDD>` / `<segDDD>` / `<noise>` token grammar, detection training
//!   sequences and the HTML table subset with `coords` attributes ([`codec`], [`table`]),
//! * the metric stack used to score model outputs ([`metrics`]) and the
//!   JSONL evaluation harness that drives it ([`harness`]).

pub mod codec;
pub mod geometry;
pub mod harness;
pub mod metrics;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod table;

pub use codec::{CoordOrder, DetectionInstance, SequenceSample, Token, TokenKind};
pub use geometry::{Box2D, ImageSize, PadAnchor, PadTransform, PixelBox};
pub use harness::report::EvalReport;
pub use table::{TableCell, TableGrid};

/// Version string recorded in every report fingerprint.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
