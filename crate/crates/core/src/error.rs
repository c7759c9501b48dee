use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("query resolved to no vectors: none of {0:?} are in the vocabulary")]
    EmptyQuery(Vec<String>),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("failed to load decade {decade}: {source}")]
    Decade {
        decade: i32,
        #[source]
        source: Box<Error>,
    },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("capacity error: requested {requested} words but only {available} candidates exist")]
    Capacity { requested: usize, available: usize },

    #[error("coverage error: class `{class}` has no embedded seed words in decade {decade}")]
    Coverage { class: String, decade: i32 },

    #[error("word `{0}` has no embedding in any decade")]
    WordCoverage(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("sample size error: need at least {needed} observations, got {got}")]
    SampleSize { needed: usize, got: usize },

    #[error("insufficient data: need at least {needed} unmasked points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("shuffle {index} failed: {source}")]
    Shuffle {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
