use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AksError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AksError {
    #[error("empty score file")]
    EmptyScoreFile,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: timestamp {timestamp} is not strictly greater than the previous one")]
    NonMonotonic { line: usize, timestamp: f64 },

    #[error("line {line}: non-finite score")]
    NonFinite { line: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("level {level} out of range 1..={max_level}")]
    LevelOutOfRange { level: usize, max_level: usize },

    #[error("selection index {index} out of range for horizon {horizon}")]
    IndexOutOfRange { index: usize, horizon: usize },

    #[error("instance has {subsets} subsets, exceeding the enumeration cap of {cap}")]
    CapExceeded { subsets: u128, cap: u128 },

    #[error("empty manifest")]
    EmptyManifest,

    #[error("scorer: frame {index}: {message}")]
    Scorer { index: usize, message: String },

    #[error("scorer protocol: {0}")]
    Protocol(String),

    #[error("empty ground truth")]
    EmptyTruth,

    #[error("config: {0}")]
    Config(String),

    #[error("bench cell (video={video}, strategy={strategy}, M={m}, L={max_level}, s_thr={s_thr}, fps={fps}): {source}")]
    Cell {
        video: String,
        strategy: String,
        m: usize,
        max_level: usize,
        s_thr: f64,
        fps: f64,
        #[source]
        source: Box<AksError>,
    },
}

impl AksError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AksError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        AksError::Parse {
            line,
            message: message.into(),
        }
    }
}
