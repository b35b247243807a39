use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("label header is not well-formed XML: {0}")]
    LabelHeaderXml(String),

    #[error("label header declares no labels")]
    EmptyHeader,

    #[error("label `{0}` is declared more than once")]
    DuplicateLabel(String),

    #[error("label `{0}` is not an attribute of the data file")]
    MissingLabel(String),

    #[error("label attribute `{0}` is not a binary nominal attribute with a value \"1\"")]
    NonbinaryLabel(String),

    #[error("invalid fold count {k} for {n} instances (need 2 <= k <= n)")]
    InvalidFoldCount { k: usize, n: usize },

    #[error("need at least 2 labels to build an affinity, got {0}")]
    TooFewLabels(usize),

    #[error("label {0} has zero total affinity")]
    DisconnectedLabel(usize),

    #[error("linear system for the basis update is singular; use lambda1 > 0")]
    SingularUpdate,

    #[error("basis matrix is zero; the smooth term has no curvature")]
    DegenerateBasis,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("need at least 2 rows, got {0}")]
    InsufficientData(usize),

    #[error("score table has no value for method {method}, dataset {dataset}")]
    IncompleteTable { method: usize, dataset: usize },

    #[error("statistic is undefined: {0}")]
    DegenerateStatistic(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    File {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with the name of the file it came from.
    pub fn in_file(self, path: impl AsRef<std::path::Path>) -> Self {
        Error::File {
            context: path.as_ref().display().to_string(),
            source: Box::new(self),
        }
    }
}
