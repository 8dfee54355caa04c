use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the metric, parsing and reporting layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate vector: zero norm{}", .context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    DegenerateVector { context: Option<String> },

    #[error("degenerate analogy query: b + a* - a has zero norm")]
    DegenerateQuery,

    #[error("degenerate mean direction: offsets cancel exactly")]
    DegenerateDirection,

    #[error("no candidate rows left after exclusion")]
    NoCandidate,

    #[error("parse error in {source_name} at byte {offset}: {message}")]
    BinaryParse {
        source_name: String,
        offset: u64,
        message: String,
    },

    #[error("parse error in {source_name} at line {line}: {message}")]
    TextParse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid embedding table: {0}")]
    InvalidTable(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("relation `{name}` is ineligible: {pairs} usable pairs, need at least {required}")]
    Ineligible {
        name: String,
        pairs: usize,
        required: usize,
    },

    #[error("empty similarity sample")]
    EmptySample,

    #[error("could not sample a valid permutation of {n} elements")]
    NoPermutation { n: usize },

    #[error("insufficient vocabulary: need {needed} words, {available} available")]
    InsufficientVocabulary { needed: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn degenerate(context: impl Into<String>) -> Self {
        Error::DegenerateVector {
            context: Some(context.into()),
        }
    }
}
