//! Repository knowledge graphs for issue-driven file retrieval.
//!
//! A checkout is turned into a typed property graph (folders, files, classes,
//! functions and their relations), enriched with short summaries and
//! embeddings, and queried with a staged retrieval pipeline that returns the
//! files most likely to change for a natural-language issue.
//!
//! The crate is organized by subsystem:
//!
//! - [`graph`]: node/edge schema, storage, traversal, statistics, snapshots and
//!   the read-only query surface.
//! - [`ingest`]: skeleton construction, per-language parsing, test linking and
//!   incremental commit-to-commit updates.
//! - [`enrich`]: summarizer/embedder providers, deterministic stubs and the
//!   content-addressed cache.
//! - [`retrieval`]: query preprocessing, semantic search, traversal expansion,
//!   mentioned-file discovery and fusion.
//! - [`clustering`]: semantic, Louvain and label-propagation file clustering.
//! - [`eval`]: issue/PR test cases, metrics, evaluation runs and A/B reports.

pub mod clustering;
pub mod embedding;
pub mod enrich;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod lang;
pub mod retrieval;
pub mod synthetic;

pub use embedding::EmbeddingVector;
pub use error::{Error, Result};
pub use graph::{Edge, EdgeKind, KnowledgeGraph, LineSpan, Node, NodeId, NodeKind};
