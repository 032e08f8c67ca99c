use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: zero valid records")]
    EmptyPool { path: PathBuf },

    #[error("{path}:{line}: record language `{found}` does not match requested `{expected}`")]
    LanguageMismatch { path: PathBuf, line: usize, expected: String, found: String },

    #[error("{path}:{line}: {message}")]
    Record { path: PathBuf, line: usize, message: String },

    #[error("cannot select {requested} samples from a pool of {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("sample {id} has no created_at timestamp")]
    MissingCreatedAt { id: String },

    #[error("project `{0}` has no samples in the pool")]
    ProjectNotFound(String),

    #[error("cannot build a BM25 index over an empty pool")]
    EmptyIndex,

    #[error("index snapshot: {0}")]
    Snapshot(String),

    #[error("unsupported language `{0}`")]
    UnsupportedLanguage(String),

    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error("prompt for sample {sample_id} needs {estimated} tokens, limit is {limit}")]
    OversizePrompt { sample_id: String, estimated: usize, limit: usize },

    #[error("model returned an empty completion")]
    EmptyCompletion,

    #[error("authentication rejected by endpoint (status {status})")]
    Authentication { status: u16 },

    #[error("request failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },

    #[error("http request failed: {0}")]
    Http(String),

    #[error("reference text is empty")]
    EmptyReference,

    #[error("paired inputs differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {required} nonzero differences, found {found}")]
    InsufficientData { required: usize, found: usize },

    #[error("no discordant pairs")]
    NoDiscordantPairs,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
