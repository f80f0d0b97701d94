use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::chemlex::smiles::SmilesError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("I/O error: {0}")]
    RawIo(#[from] io::Error),

    #[error("malformed {what} at line {line}: {message}")]
    Format {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("empty document: {0}")]
    EmptyDocument(String),

    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("word id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },

    #[error("vocabulary of {size} words is too large for {mode} mode (limit {limit}); use negative sampling")]
    VocabularyTooLarge {
        size: usize,
        limit: usize,
        mode: &'static str,
    },

    #[error("{token:?} is not in the vocabulary (closest: {suggestions:?})")]
    OutOfVocabulary {
        token: String,
        suggestions: Vec<String>,
    },

    #[error("empty candidate set")]
    EmptyCandidateSet,

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("corpus was encoded with vocabulary {corpus}, not {vocab}")]
    VocabularyMismatch { corpus: String, vocab: String },

    #[error("feature schema mismatch")]
    SchemaMismatch,

    #[error("group is empty after vocabulary filtering (missing: {missing:?})")]
    EmptyGroup { missing: Vec<String> },

    #[error(transparent)]
    Smiles(#[from] SmilesError),

    #[error("classifier needs at least two examples of each class (positives: {positives}, negatives: {negatives})")]
    InsufficientClasses { positives: usize, negatives: usize },

    #[error("invalid regular expression: {0}")]
    Regex(#[from] regex::Error),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("name resolver unavailable after {attempts} attempts: {last_error}")]
    ResolverUnavailable { attempts: u32, last_error: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
