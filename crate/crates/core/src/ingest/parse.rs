//! Parallel per-file parsing and serialized merge into the graph.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use super::adapter::{AdapterRegistry, FallbackAdapter, ParsedFile, ParserAdapter};
use crate::graph::{EdgeKind, EnrichmentStatus, FileRecord, KnowledgeGraph, Node, NodeId, NodeKey, NodeKind, ParseStatus};
use crate::{Error, Result};

pub(crate) struct ParseOutcome {
    pub path: String,
    pub language: String,
    pub result: std::result::Result<ParsedFile, String>,
    pub fallback: bool,
}

/// Parses `(path, language, content)` triples in parallel. Adapter errors and
/// panics are captured per file.
pub(crate) fn parse_files(items: Vec<(String, String, Option<String>)>, registry: &AdapterRegistry) -> Vec<ParseOutcome> {
    items
        .into_par_iter()
        .map(|(path, language, content)| {
            let (adapter, fallback) = registry.for_language(&language);
            let fallback = fallback || content.is_none();
            let text = content.unwrap_or_default();
            let result = if fallback {
                FallbackAdapter.parse("", &path).map_err(|e| e.to_string())
            } else {
                match catch_unwind(AssertUnwindSafe(|| adapter.parse(&text, &path))) {
                    Ok(Ok(pf)) => {
                        let lines = text.lines().count().max(1) as u32;
                        pf.validate(lines).map(|_| pf).map_err(|e| e.to_string())
                    }
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(panic) => Err(panic_message(panic)),
                }
            };
            ParseOutcome {
                path,
                language,
                result,
                fallback,
            }
        })
        .collect()
}

fn panic_message(panic: Box<dyn std::any::Any + Send>) -> String {
    let msg = panic
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| panic.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into());
    format!("adapter panicked: {msg}")
}

/// Fields whose change invalidates a node's summary and embeddings.
fn enrichment_input(n: &Node) -> (NodeKind, &str, Option<&str>, Option<&str>, Option<&str>) {
    (
        n.kind,
        &n.name,
        n.signature.as_deref(),
        n.docstring.as_deref(),
        n.raw_content.as_deref(),
    )
}

/// Copies enrichment results from `old` when the inputs they were derived
/// from are unchanged.
pub(crate) fn carry_enrichment(old: &Node, new: &mut Node) {
    if enrichment_input(old) == enrichment_input(new) {
        new.description = old.description.clone();
        new.description_embedding = old.description_embedding.clone();
        new.code_embedding = old.code_embedding.clone();
        new.enrichment = old.enrichment;
    } else {
        new.enrichment = EnrichmentStatus::Pending;
    }
}

pub(crate) fn file_entities(graph: &KnowledgeGraph, file: NodeId) -> Vec<NodeId> {
    graph
        .outgoing(file)
        .filter(|&(k, dst)| {
            matches!(k, EdgeKind::Implements | EdgeKind::Contains) && graph.node(dst).is_some_and(|n| n.kind.is_entity())
        })
        .map(|(_, dst)| dst)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Replaces the entities of one file with the outcome of its parse.
pub(crate) fn apply_outcome(graph: &mut KnowledgeGraph, outcome: ParseOutcome, ts: DateTime<Utc>) -> Result<()> {
    let path = outcome.path;
    let file_id = graph
        .node_by_path(&path)
        .filter(|n| n.kind == NodeKind::File)
        .map(|n| n.id)
        .ok_or_else(|| Error::Schema(format!("no File node for `{path}`")))?;
    let existing = file_entities(graph, file_id);

    let (parsed, status) = match outcome.result {
        Ok(pf) if outcome.fallback => (pf, ParseStatus::Fallback),
        Ok(pf) => (pf, ParseStatus::Parsed),
        Err(message) => {
            tracing::warn!("parse failed for {path}: {message}");
            (ParsedFile::default(), ParseStatus::Failed { message })
        }
    };

    let mut keep: BTreeMap<String, NodeId> = BTreeMap::new();
    for e in &parsed.entities {
        let mut node = Node::entity(e.kind, path.clone(), e.qualified_name.clone(), e.line_span).with_timestamp(ts);
        node.name = e.name.clone();
        node.signature = e.signature.clone();
        node.docstring = e.docstring.clone();
        node.raw_content = Some(e.raw_content.clone());
        let key = node.key();
        if let Some(old) = graph.lookup(&key).and_then(|id| graph.node(id)) {
            carry_enrichment(old, &mut node);
        }
        let id = graph.upsert_node(node)?;
        keep.insert(e.qualified_name.clone(), id);
    }
    let kept: BTreeSet<NodeId> = keep.values().copied().collect();
    for id in existing {
        if !kept.contains(&id) {
            graph.remove_node(id);
        }
    }
    for e in &parsed.entities {
        let id = keep[&e.qualified_name];
        graph.add_edge(file_id, id, EdgeKind::Implements)?;
        if e.kind == NodeKind::MemberFunction {
            let parent = e.parent.as_ref().and_then(|p| {
                graph.lookup(&NodeKey {
                    kind: NodeKind::Class,
                    path: path.clone(),
                    qualified_name: p.clone(),
                })
            });
            if let Some(class_id) = parent {
                graph.add_edge(class_id, id, EdgeKind::Implements)?;
            }
        }
    }

    let file = graph.node_mut(file_id).expect("file exists");
    if file.docstring != parsed.docstring {
        file.docstring = parsed.docstring;
        file.enrichment = EnrichmentStatus::Pending;
    }
    graph.set_file_record(
        path,
        FileRecord {
            language: outcome.language,
            status,
            imports: parsed.imports,
            relations: parsed.relations,
        },
    );
    Ok(())
}

/// Parses the given File nodes from their stored content and merges results.
pub(crate) fn parse_paths(graph: &mut KnowledgeGraph, paths: &[String], registry: &AdapterRegistry) -> Result<()> {
    let items: Vec<(String, String, Option<String>)> = paths
        .iter()
        .filter_map(|p| graph.node_by_path(p))
        .filter(|n| n.kind == NodeKind::File)
        .map(|n| {
            (
                n.path.clone(),
                n.language.clone().unwrap_or_default(),
                n.raw_content.clone(),
            )
        })
        .collect();
    let mut outcomes = parse_files(items, registry);
    outcomes.sort_by(|a, b| a.path.cmp(&b.path));
    for outcome in outcomes {
        let ts = graph
            .node_by_path(&outcome.path)
            .map(|n| n.last_modified)
            .unwrap_or_default();
        apply_outcome(graph, outcome, ts)?;
    }
    Ok(())
}
