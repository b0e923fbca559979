//! Crate-wide error type.

use crate::ClassId;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Per-class shortfall reported by curation and augmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deficit {
    pub class_id: ClassId,
    pub split: String,
    pub required: u64,
    pub available: u64,
}

impl std::fmt::Display for Deficit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "class {}: need {} in {}, have {}",
            self.class_id, self.required, self.split, self.available
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs_rows}x{lhs_cols} vs {rhs_rows}x{rhs_cols}")]
    DimensionMismatch {
        op: String,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("non-finite value at entry {index} while {context}")]
    NonFinite { context: String, index: usize },

    #[error("degenerate input: row {row} has zero norm")]
    DegenerateRow { row: usize },

    #[error("invalid mask entry at ({row}, {col}): {value} (must be 0 or 1)")]
    InvalidMask { row: usize, col: usize, value: f64 },

    #[error("invalid label row {row}: {detail}")]
    InvalidLabel { row: usize, detail: String },

    #[error("invalid blend weight {value} at row {row} (must lie in [0, 1])")]
    InvalidWeight { row: usize, value: f64 },

    #[error("training diverged at step {step}: {reason}")]
    Divergence { step: u64, reason: String },

    #[error("empty class profile")]
    EmptyProfile,

    #[error("profile error: {0}")]
    InvalidProfile(String),

    #[error("profile needs at least {required} classes, got {got}")]
    ProfileTooSmall { got: usize, required: usize },

    #[error(
        "epsilon {epsilon} too small: count {count} with d={d} gives count*d + epsilon = {value} <= 1; \
         require epsilon > {required}"
    )]
    EpsilonTooSmall {
        epsilon: f64,
        d: f64,
        count: u64,
        value: f64,
        required: f64,
    },

    #[error("batch of {got} samples is too small for pairwise mixing (need at least 2)")]
    BatchTooSmall { got: usize },

    #[error(
        "total {requested} infeasible for {n} classes with imbalance {imbalance} and alpha {alpha}; \
         achievable range is [{min_total}, {max_total}]"
    )]
    InfeasibleTotal {
        requested: u64,
        n: usize,
        imbalance: f64,
        alpha: f64,
        min_total: u64,
        max_total: u64,
    },

    #[error("insufficient source samples for {} classes: {}", .0.len(), format_deficits(.0))]
    SourceDeficit(Vec<Deficit>),

    #[error("unknown class {0} (not present in the contribution table)")]
    UnknownClass(ClassId),

    #[error("manifest error: {0}")]
    InvalidManifest(String),

    #[error("profile CSV line {line}: {message}")]
    ProfileCsv { line: usize, message: String },

    #[error("feature file {path}: {message}")]
    FeatureFile { path: String, message: String },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_deficits(deficits: &[Deficit]) -> String {
    let shown: Vec<String> = deficits.iter().take(8).map(|d| d.to_string()).collect();
    let mut s = shown.join("; ");
    if deficits.len() > 8 {
        s.push_str(&format!("; ... and {} more", deficits.len() - 8));
    }
    s
}

impl Error {
    /// Coarse classification used by the CLI to pick an exit code.
    pub fn is_deficit(&self) -> bool {
        matches!(self, Error::SourceDeficit(_) | Error::InfeasibleTotal { .. })
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}
