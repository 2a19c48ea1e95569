use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unreadable image {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },

    #[error("unsupported image format: {path}")]
    UnsupportedFormat { path: PathBuf },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("image data length {len} does not match {width}x{height}")]
    BadLength { width: usize, height: usize, len: usize },

    #[error("image contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("region {region:?} exceeds image bounds {width}x{height}")]
    OutOfBounds {
        region: crate::image::Rect,
        width: usize,
        height: usize,
    },

    #[error("affine transform is singular")]
    SingularTransform,

    #[error("inverse transform left an imaginary residue of {residue:e}")]
    ImaginaryResidue { residue: f64 },

    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    TooSmall { width: usize, height: usize, min: usize },

    #[error("image too large for direct evaluation: {pixels} pixels (cap {cap})")]
    TooLarge { pixels: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matching surface is constant, SNR undefined")]
    ConstantSurface,

    #[error("need at least {need} frames, got {got}")]
    InsufficientFrames { need: usize, got: usize },

    #[error("threshold estimation failed: {0}")]
    NoDecorrelation(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("no ship detected (best SNR {best_snr:.3} at dt {dt:.3}s); use --force to segment anyway")]
    NotDetected { best_snr: f64, dt: f64 },

    #[error("malformed {what} at {path}:{line}: {reason}")]
    Parse {
        what: &'static str,
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub(crate) fn ensure_same_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}
