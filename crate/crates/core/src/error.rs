use std::io;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("filter design: {0}")]
    Design(String),

    #[error("unstable filter section {section}: pole radius {radius}")]
    UnstableFilter { section: usize, radius: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("epoch window [{start}, {end}) exceeds recording of {len} samples")]
    EpochBounds { start: i64, end: i64, len: usize },

    #[error("empty superset {side} for coding-matrix column {column}")]
    EmptySuperset { column: usize, side: u8 },

    #[error("invalid coding matrix: {0}")]
    CodingMatrix(String),

    #[error("non-finite {what} at epoch {epoch}, batch {batch}")]
    NonFinite {
        what: &'static str,
        epoch: usize,
        batch: usize,
    },

    #[error("format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    /// Short stable tag, used by the CLI for machine-parsable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Config(_) => "config",
            Error::Design(_) => "design",
            Error::UnstableFilter { .. } => "unstable-filter",
            Error::Degenerate(_) => "degenerate",
            Error::EpochBounds { .. } => "epoch-bounds",
            Error::EmptySuperset { .. } => "empty-superset",
            Error::CodingMatrix(_) => "coding-matrix",
            Error::NonFinite { .. } => "non-finite",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
