use std::path::PathBuf;

use crate::graph::{DomainTag, NodeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node not found: {0}")]
    NotFound(NodeId),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("source and target domains share no items; superhighway construction needs at least one shared item")]
    EmptySharedItems,

    #[error("domain mismatch: {node} is not a {expected} user")]
    DomainMismatch { node: NodeId, expected: DomainTag },

    #[error("candidate pairs {pairs} exceed the cap of {cap}; raise alpha or the cap")]
    CapExceeded { pairs: u64, cap: u64 },

    #[error("training diverged at epoch {epoch} with learning rate {learning_rate}")]
    Divergence { epoch: usize, learning_rate: f64 },

    #[error("no users are eligible for evaluation")]
    EmptyEvalSet,

    #[error("ranking contains duplicate entry {0}")]
    InvalidRanking(NodeId),

    #[error("model covers too few evaluation items: {missing} of {total} missing")]
    Coverage { missing: usize, total: usize },

    #[error("{}:{line}: {reason}", path.display())]
    Ingest {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{0} domain has no interactions")]
    EmptyDomain(DomainTag),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("bad artifact {}: {reason}", path.display())]
    Artifact { path: PathBuf, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name, used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "NotFound",
            Error::InvalidParam(_) => "InvalidParam",
            Error::EmptySharedItems => "EmptySharedItems",
            Error::DomainMismatch { .. } => "DomainMismatch",
            Error::CapExceeded { .. } => "CapExceeded",
            Error::Divergence { .. } => "Divergence",
            Error::EmptyEvalSet => "EmptyEvalSet",
            Error::InvalidRanking(_) => "InvalidRanking",
            Error::Coverage { .. } => "Coverage",
            Error::Ingest { .. } => "Ingest",
            Error::EmptyDomain(_) => "EmptyDomain",
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::Artifact { .. } => "Artifact",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
