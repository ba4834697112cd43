use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based when known.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid tag sequence: {0}")]
    InvalidTags(String),

    #[error("overlapping spans: {0}")]
    OverlappingSpans(String),

    #[error("alignment link {link:?} out of bounds for pair {pair_id} ({src_len}x{tgt_len})")]
    LinkOutOfBounds {
        pair_id: String,
        link: (usize, usize),
        src_len: usize,
        tgt_len: usize,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("vocabulary of {size} words exceeds the configured cap of {cap}")]
    VocabularyOverflow { size: usize, cap: usize },

    #[error(
        "link {0:?} carries no probability; use links from viterbi alignment or a Pharaoh file with i-j-p entries"
    )]
    MissingProbability((usize, usize)),

    /// Two parallel streams disagree on a sentence id or shape.
    #[error("mismatch at sentence {id}: {message}")]
    Mismatch { id: String, message: String },

    /// Two inputs that must hold one record per pair have different sizes.
    #[error("{left} has {left_count} sentences but {right} has {right_count}")]
    CountMismatch {
        left: String,
        left_count: usize,
        right: String,
        right_count: usize,
    },

    /// A user-supplied external command failed.
    #[error("external command: {0}")]
    External(String),

    /// Another run holds the working directory.
    #[error("working directory is locked by {}; remove it if no run is active", .0.display())]
    Locked(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("review: {0}")]
    Review(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn mismatch(id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Mismatch {
            id: id.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by how the tool was invoked rather than by the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
