use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimensionality {0}; volumes must have 1 to 3 axes")]
    UnsupportedDimension(usize),

    #[error("shape {dims:?} holds {expected} samples but {actual} were supplied")]
    ShapeMismatch {
        dims: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("volume is empty")]
    EmptyVolume,

    #[error("index {index:?} out of bounds for extents {dims:?}")]
    IndexOutOfBounds { index: Vec<usize>, dims: Vec<usize> },

    #[error("extents {0:?} are not a common power of two; call pad_to_dyadic first")]
    NotDyadic(Vec<usize>),

    #[error("volume has no origin extent; only padded volumes can be cropped")]
    NotPadded,

    #[error("origin extent {origin:?} exceeds volume extents {dims:?}")]
    OriginExceedsDims {
        origin: Vec<usize>,
        dims: Vec<usize>,
    },

    #[error("level {level} out of range; pyramid has levels 0..{levels}")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("invalid level window [{n0}, {n1}] for a pyramid with {levels} detail levels")]
    InvalidWindow { n0: usize, n1: usize, levels: usize },

    #[error("malformed pyramid: {0}")]
    Structure(String),

    #[error("pyramid shapes differ: (s={s_a}, m={m_a}) vs (s={s_b}, m={m_b})")]
    PyramidMismatch {
        s_a: usize,
        m_a: u32,
        s_b: usize,
        m_b: u32,
    },

    #[error("volume shapes differ: {a:?} vs {b:?}")]
    VolumeMismatch { a: Vec<usize>, b: Vec<usize> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown phantom kind `{0}`")]
    UnknownPhantom(String),

    #[error("malformed header {path}: {message} (at byte {offset})")]
    MalformedHeader {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("unknown sample type `{name}` in {path} (at byte {offset})")]
    UnknownSampleType {
        path: PathBuf,
        name: String,
        offset: usize,
    },

    #[error("payload {path} has {actual} bytes, header requires {expected} (mismatch begins at byte {offset})")]
    PayloadSize {
        path: PathBuf,
        expected: u64,
        actual: u64,
        offset: u64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short failure category, used for CLI diagnostics and exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedHeader { .. }
            | Error::UnknownSampleType { .. }
            | Error::PayloadSize { .. } => "format",
            Error::InvalidParameter(_) | Error::UnknownPhantom(_) => "usage",
            _ => "domain",
        }
    }
}
