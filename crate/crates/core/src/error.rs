//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid spin value {value} at site {site}; spins must be -1 or +1")]
    InvalidSpin { site: usize, value: i8 },

    #[error("lattice {lx}x{ly} is not bipartite; the Marshall sign rule cannot be applied")]
    NotBipartite { lx: usize, ly: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("layer {layer} ({rows}x{cols}) does not fit the {max_rows}x{max_cols} crossbar")]
    Unmappable {
        layer: usize,
        rows: usize,
        cols: usize,
        max_rows: usize,
        max_cols: usize,
    },

    #[error("network has {layers} MVM layers but only {tiles} tiles are available")]
    TooManyLayers { layers: usize, tiles: usize },

    #[error("energy probe misuse: {0}")]
    Probe(String),

    #[error("benchmark runner failed: {0}")]
    Runner(String),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("checksum mismatch for {tensor}: manifest {expected:08x}, file {actual:08x}")]
    Checksum {
        tensor: String,
        expected: u32,
        actual: u32,
    },

    #[error("size mismatch for {tensor}: expected {expected} bytes, found {actual}")]
    SizeMismatch {
        tensor: String,
        expected: u64,
        actual: u64,
    },

    #[error("unsupported report format_version {0}")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }
}
