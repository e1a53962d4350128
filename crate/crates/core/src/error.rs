use std::path::PathBuf;

use crate::grid::Unit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("zero dimension: {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("data length {found} does not match {width}x{height}")]
    LengthMismatch { width: usize, height: usize, found: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("map must be at least 2x2 for gradients, got {width}x{height}")]
    MapTooSmall { width: usize, height: usize },
    #[error("coordinate ({x}, {y}) outside {width}x{height}")]
    OutOfBounds { x: usize, y: usize, width: usize, height: usize },
    #[error("no edges")]
    NoEdges,
    #[error("no associated edges")]
    NoAssociatedEdges,
    #[error("degenerate pair: q equals p")]
    DegeneratePair,
    #[error("invalid thresholds: {}", .0.join(", "))]
    InvalidThresholds(Vec<String>),
    #[error("unit mismatch: expected {expected:?}, found {found:?}")]
    UnitMismatch { expected: Unit, found: Unit },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("empty valid set")]
    EmptyValidSet,
    #[error("no valid pixels")]
    NoValidPixels,
    #[error("not PFM")]
    NotPfm,
    #[error("color PFM (PF) where grayscale (Pf) was expected")]
    ColorPfm,
    #[error("grayscale PFM (Pf) where color (PF) was expected")]
    GrayPfm,
    #[error("not PGM (P5)")]
    NotPgm,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("payload size mismatch: expected {expected} bytes, found {found}")]
    PayloadSize { expected: usize, found: usize },
    #[error("ambiguous z-order: overlapping shapes {0} and {1} share a disparity")]
    AmbiguousZOrder(usize, usize),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("perturbation pushes a border out of bounds: {0}")]
    BorderOutOfBounds(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
