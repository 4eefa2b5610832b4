use std::path::PathBuf;

use thiserror::Error;

use crate::ClusterId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty term")]
    EmptyTerm,
    #[error("empty query")]
    EmptyQuery,
    #[error("query reduced to empty")]
    QueryReducedToEmpty,
    #[error("duplicate doc_id: {0}")]
    DuplicateDocId(String),
    #[error("decryption failed: ciphertext did not authenticate")]
    Decrypt,
    #[error("unknown token: {0}")]
    UnknownToken(String),
    #[error("unknown cluster id: {0}")]
    UnknownCluster(ClusterId),
    #[error("index has not been clustered")]
    NotClustered,
    #[error("no history for cluster {0}")]
    NoHistory(ClusterId),
    #[error("no query traffic")]
    NoQueryTraffic,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid key: {0}")]
    InvalidKey(String),
    #[error("{what}:{line}: {msg}")]
    Parse {
        what: String,
        line: usize,
        msg: String,
    },
    #[error("index version mismatch in {path}: {msg}")]
    Version { path: PathBuf, msg: String },
    #[error("corrupt index at {path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },
    #[error("cloud backend: {0}")]
    Backend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(what: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            what: what.into(),
            line,
            msg: msg.into(),
        }
    }
}
