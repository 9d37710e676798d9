use std::fmt;

use crate::graph::{EdgeKind, NodeId, NodeKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("edge {kind} may not connect {src_kind} -> {dst_kind}")]
    EdgeConstraint {
        kind: EdgeKind,
        src_kind: NodeKind,
        dst_kind: NodeKind,
    },

    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("unsupported snapshot format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("snapshot parse error at line {line}, column {column}: {message}")]
    SnapshotParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid request: {message}; allowed forms: {}", AllowedForms(.allowed))]
    InvalidRequest {
        message: String,
        allowed: &'static [&'static str],
    },

    #[error("revision error: {0}")]
    Revision(String),

    #[error("revision mismatch: graph is at {graph}, change set starts from {change_set}")]
    RevisionMismatch { graph: String, change_set: String },

    #[error("git command failed: {0}")]
    Git(String),

    #[error("provider error: {0}")]
    Provider(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph has no enriched nodes to search")]
    NotEnriched,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

struct AllowedForms<'a>(&'a [&'static str]);

impl fmt::Display for AllowedForms<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(", "))
    }
}
