use std::path::PathBuf;

use crate::corpus::Post;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}: {message}")]
    Value { row: usize, message: String },

    #[error("post {post_id}: {message}")]
    Consistency { post_id: String, message: String },

    #[error("requested {requested} items but only {available} are available")]
    Size { requested: usize, available: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("only {found} of {needed} demonstrations available for {cell}")]
    Scarcity {
        cell: String,
        needed: usize,
        found: usize,
    },

    #[error("quota plan error: {0}")]
    Plan(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("generation stopped after {} candidates: {source}", produced.len())]
    PartialGeneration {
        produced: Box<Vec<Post>>,
        #[source]
        source: Box<Error>,
    },

    #[error("training error: {0}")]
    Training(String),

    #[error("agreement undefined: {0}")]
    UndefinedAgreement(String),

    #[error("stale input {path}: recorded digest {recorded}, found {actual}")]
    StaleInput {
        path: String,
        recorded: String,
        actual: String,
    },

    #[error("stage `{stage}` requires `{missing}` to run first")]
    Dependency { stage: String, missing: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
