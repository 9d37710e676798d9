//! Repository ingestion: skeleton, parsing, test linking and incremental
//! updates.

pub mod adapter;
pub mod checkout;
pub mod diff;
pub mod filter;
pub mod manifest;
mod parse;
pub mod python;
pub mod resolve;
pub mod skeleton;
pub mod tests_link;
pub mod update;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use adapter::{AdapterRegistry, FallbackAdapter, ParsedEntity, ParsedFile, ParserAdapter};
pub use checkout::{open_checkout, Checkout, DirCheckout, GitCheckout, MemoryCheckout, RepoRef};
pub use diff::{diff_checkouts, diff_revisions, ChangeSet};
pub use filter::{IngestFilter, SkippedFile};
pub use manifest::{FixtureManifest, RevisionCounts};
pub use python::PythonAdapter;
pub use resolve::resolve_relations;
pub use skeleton::build_skeleton;
pub use tests_link::{link_tests, TestHeuristics};
pub use update::update_graph;

use crate::graph::{EdgeKind, KnowledgeGraph, NodeKind, ParseStatus};
use crate::Result;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub filter: IngestFilter,
    pub tests: TestHeuristics,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub parse_failures: Vec<ParseFailure>,
    pub unresolved_relations: BTreeMap<EdgeKind, usize>,
    #[serde(default)]
    pub skipped_files: Vec<SkippedFile>,
}

pub(crate) fn collect_diagnostics(
    graph: &KnowledgeGraph,
    unresolved: BTreeMap<EdgeKind, usize>,
    skipped_files: Vec<SkippedFile>,
) -> Diagnostics {
    let parse_failures = graph
        .file_records()
        .filter_map(|(path, r)| match &r.status {
            ParseStatus::Failed { message } => Some(ParseFailure {
                path: path.to_string(),
                message: message.clone(),
            }),
            _ => None,
        })
        .collect();
    Diagnostics {
        parse_failures,
        unresolved_relations: unresolved,
        skipped_files,
    }
}

/// Parses every File node and resolves cross-file relations.
pub fn parse_repository(graph: &mut KnowledgeGraph, registry: &AdapterRegistry) -> Result<Diagnostics> {
    let paths: Vec<String> = graph
        .nodes_of_kind(NodeKind::File)
        .map(|n| n.path.clone())
        .collect();
    parse::parse_paths(graph, &paths, registry)?;
    let unresolved = resolve_relations(graph, registry)?;
    Ok(collect_diagnostics(graph, unresolved, Vec::new()))
}

/// Skeleton, parse and test linking in one pass.
pub fn build_graph(
    checkout: &dyn Checkout,
    repo_url: &str,
    registry: &AdapterRegistry,
    options: &BuildOptions,
) -> Result<(KnowledgeGraph, Diagnostics)> {
    let skeleton = build_skeleton(checkout, repo_url, &options.filter)?;
    let mut graph = skeleton.graph;
    let mut diagnostics = parse_repository(&mut graph, registry)?;
    diagnostics.skipped_files = skeleton.skipped;
    link_tests(&mut graph, &options.tests)?;
    Ok((graph, diagnostics))
}
