//! JSONL evaluation harness: record formats, orchestration, reports and comparison.

pub mod compare;
pub mod encode;
pub mod eval;
pub mod formats;
pub mod report;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::CodecError;

pub use compare::{compare_reports, Comparison, RelativeValue};
pub use encode::{decode_detection_text, encode_detection_dataset, encode_table_dataset, EncodeConfig, EncodeSummary};
pub use eval::{evaluate_files, run_eval, EvalConfig, EvalInputs, EvalOutput};
pub use report::EvalReport;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}:{line}: {message}")]
    Schema { origin: String, line: usize, message: String },
    #[error("{origin}: duplicate id {id:?}")]
    DuplicateId { origin: String, id: String },
    #[error("example {id:?}: {message}")]
    InvalidExample { id: String, message: String },
    #[error("prediction ids do not match ground truth: {missing} missing, {extra} extra (first: {first:?})")]
    IdMismatch { missing: usize, extra: usize, first: String },
    #[error("no evaluable examples")]
    NoExamples,
    #[error("example {id:?}: {source}")]
    Codec { id: String, source: CodecError },
    #[error("cannot compare a {candidate} report against a {reference} report")]
    TaskMismatch { reference: String, candidate: String },
    #[error("metric names differ: only in reference {only_reference:?}, only in candidate {only_candidate:?}")]
    MetricMismatch { only_reference: Vec<String>, only_candidate: Vec<String> },
    #[error("reference value of {metric:?} is zero")]
    DivisionByZeroReference { metric: String },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }

    /// Malformed or misaligned input data, as opposed to I/O or metric failures.
    pub fn is_schema_error(&self) -> bool {
        matches!(
            self,
            HarnessError::Schema { .. }
                | HarnessError::DuplicateId { .. }
                | HarnessError::InvalidExample { .. }
                | HarnessError::IdMismatch { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Ocr,
    Table,
    Detect,
    Kern,
    Smiles,
    Match,
}

impl Task {
    pub const ALL: [Task; 6] = [Task::Ocr, Task::Table, Task::Detect, Task::Kern, Task::Smiles, Task::Match];

    pub fn name(self) -> &'static str {
        match self {
            Task::Ocr => "ocr",
            Task::Table => "table",
            Task::Detect => "detect",
            Task::Kern => "kern",
            Task::Smiles => "smiles",
            Task::Match => "match",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| format!("unknown task {s:?}"))
    }
}
