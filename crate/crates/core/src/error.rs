//! Error type shared by every module in the crate.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row {row} in {path}: {reason}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("dataset {name:?} contains no examples")]
    EmptyDataset { name: String },

    #[error("cannot sample {requested} examples from a dataset of {available}")]
    SampleSize { requested: usize, available: usize },

    #[error("attack target {target:?} is incompatible with task kind {task:?}")]
    IncompatibleTarget { target: String, task: String },

    #[error("token position {position} out of range for {len} tokens")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("empty replacement for token position {position}")]
    EmptyReplacement { position: usize },

    #[error("word {word:?} contains no letters")]
    NoLetters { word: String },

    #[error("text contains no word tokens")]
    NoWords,

    #[error("label {label} out of range for {num_labels} labels")]
    LabelOutOfRange { label: usize, num_labels: usize },

    #[error("victim {victim:?} does not expose token gradients")]
    GradientsUnsupported { victim: String },

    #[error("malformed model input: {reason}")]
    MalformedInput { reason: String },

    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("metric requires at least one attack result")]
    EmptyResults,

    #[error("no clean-correct examples: attack success rate denominator is zero")]
    NoCleanCorrect,

    #[error("result list covers {results} examples but total is {total}")]
    ResultCountMismatch { results: usize, total: usize },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("bad model file {path} (line {line}): {reason}")]
    ModelFormat {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("model was trained against a different vocabulary (hash {expected:x}, found {actual:x})")]
    VocabHashMismatch { expected: u64, actual: u64 },

    #[error("masked-language-model adapter is not attached")]
    AdapterMissing,

    #[error("saliency profile has {scores} scores but the text has {words} word tokens")]
    MisalignedProfile { scores: usize, words: usize },

    #[error("nothing to report: no benchmark cells completed")]
    NoReports,

    #[error("stored metrics for cell {cell:?} do not match re-aggregation of its results")]
    MetricsMismatch { cell: String },
}

impl Error {
    /// Attaches a path to a raw i/o error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
