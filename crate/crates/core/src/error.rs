use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("input is empty: {0}")]
    EmptyInput(String),

    #[error("vocabulary is empty after filtering (min_df = {min_df}, max_df_ratio = {max_df_ratio}, {docs} documents)")]
    EmptyVocabulary {
        min_df: usize,
        max_df_ratio: f64,
        docs: usize,
    },

    #[error("requested {requested} components but the matrix has effective rank {effective_rank}")]
    RankDeficient {
        requested: usize,
        effective_rank: usize,
    },

    #[error("LDA needs raw counts; the matrix is {0}-weighted")]
    NeedsRawCounts(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("graph needs at least 2 nodes, got {0}")]
    GraphTooSmall(usize),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Process exit code for the command line front end: 3 for internal
    /// invariant violations, 2 for everything caused by input or usage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}
