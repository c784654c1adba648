use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A malformed line in a dataset, generator or checkpoint file.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group descriptor: {0}")]
    InvalidGroup(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector is not trace-free in block {block} (sum {sum:e})")]
    NotTraceFree { block: usize, sum: f64 },

    #[error("vector lies outside the closed Weyl chamber (root pairing {pairing:e})")]
    OutsideChamber { pairing: f64 },

    #[error("singular matrix in factor {factor}")]
    SingularMatrix { factor: usize },

    #[error("factor {factor} is not unimodular (det = {det})")]
    NotUnimodular { factor: usize, det: f64 },

    #[error("matrix entries overflow while evaluating word {word}")]
    Overflow { word: String },

    #[error("float deduplication collision: two elements agree to 1e-9 but differ at full precision (word {word})")]
    DedupCollision { word: String },

    #[error("predicted record count {predicted} exceeds the record cap {cap}; raise the cap explicitly")]
    RecordCap { predicted: f64, cap: u64 },

    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },

    #[error("unsupported dataset version {0}")]
    Version(String),

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

    pub(crate) fn parse(path: impl Into<PathBuf>, source: ParseError) -> Self {
        Error::Parse {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by files: unreadable, malformed, or of the wrong version.
    pub fn is_format_or_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. } | Error::Version(_))
    }
}
