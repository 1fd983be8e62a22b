use std::path::PathBuf;

use crate::library::MotionPrimitive;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("episode already finished; reset before stepping")]
    EpisodeDone,

    #[error("insufficient data: need {needed}, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("insufficient positive samples: need at least {needed}, have {available}")]
    InsufficientPositives { needed: usize, available: usize },

    #[error("skill chain incomplete after {} primitives: start state not covered", .0.len())]
    ChainIncomplete(Box<Vec<MotionPrimitive>>),

    #[error("no option is available in the current state")]
    NoAvailableOption,

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("corrupt file {path}: {reason}")]
    Corruption { path: PathBuf, reason: String },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
