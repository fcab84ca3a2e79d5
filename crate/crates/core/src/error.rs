use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid interval for query {query_id:?}: start {start}, end {end}")]
    InvalidInterval {
        query_id: String,
        start: f64,
        end: f64,
    },

    #[error("no ground-truth annotation for query {0:?}")]
    MissingAnnotation(String),

    #[error("run {system_id:?} has no ranked list for query {query_id:?}")]
    MissingPrediction { system_id: String, query_id: String },

    #[error("run {system_id:?} contains query {query_id:?} which is not in the ground truth")]
    UnknownQuery { system_id: String, query_id: String },

    #[error("duplicate key {0:?}")]
    DuplicateKey(String),

    #[error("the evaluated query set is empty")]
    EmptyQuerySet,

    #[error("Kendall's tau-b is undefined: one of the score vectors is entirely tied")]
    UndefinedCorrelation,

    #[error("no feasible perturbation for this relevance list")]
    Infeasible,

    #[error("need at least {needed} queries for two disjoint subsets, have {available}")]
    InsufficientQueries { needed: usize, available: usize },

    #[error("ground truth for query {0:?} has zero length")]
    DegenerateAnnotation(String),

    #[error("unknown measure {0:?} (expected family@K[:theta], family one of recall, axiou, ncxiou, ap, dcg)")]
    UnknownMeasure(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input data or parameters rather than by
    /// the environment (I/O).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
