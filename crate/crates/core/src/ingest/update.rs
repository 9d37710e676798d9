//! Commit-to-commit incremental updates.

use std::collections::BTreeSet;

use super::adapter::AdapterRegistry;
use super::checkout::Checkout;
use super::diff::ChangeSet;
use super::parse::{file_entities, parse_paths};
use super::resolve::resolve_relations;
use super::skeleton::{ensure_parent, file_node, prune_empty_folders, refresh_root};
use super::tests_link::link_tests;
use super::{collect_diagnostics, BuildOptions, Diagnostics};
use crate::graph::{EdgeKind, KnowledgeGraph, NodeKind};
use crate::{Error, Result};

fn remove_file(graph: &mut KnowledgeGraph, path: &str) {
    if let Some(id) = graph.node_by_path(path).filter(|n| n.kind == NodeKind::File).map(|n| n.id) {
        for e in file_entities(graph, id) {
            graph.remove_node(e);
        }
        graph.remove_node(id);
    }
    graph.remove_file_record(path);
}

/// Moves `graph` from `change_set.old_revision` to the revision of
/// `checkout`. Nodes whose enrichment inputs changed are left pending.
pub fn update_graph(
    graph: &mut KnowledgeGraph,
    checkout: &dyn Checkout,
    change_set: &ChangeSet,
    registry: &AdapterRegistry,
    options: &BuildOptions,
) -> Result<Diagnostics> {
    if graph.meta.revision != change_set.old_revision {
        return Err(Error::RevisionMismatch {
            graph: graph.meta.revision.clone(),
            change_set: change_set.old_revision.clone(),
        });
    }
    if checkout.revision() != change_set.new_revision {
        return Err(Error::Revision(format!(
            "checkout is at {}, change set targets {}",
            checkout.revision(),
            change_set.new_revision
        )));
    }
    if change_set.is_empty() {
        graph.touch();
        return Ok(collect_diagnostics(graph, Default::default(), Vec::new()));
    }

    let selection = options.filter.select(checkout)?;
    let target: BTreeSet<String> = selection.files.iter().map(|f| f.path.clone()).collect();
    let current: BTreeSet<String> = graph.file_paths().map(str::to_string).collect();

    // The selected file set is recomputed so that edits to ignore files and
    // size-cap crossings are handled like any other change.
    for path in current.difference(&target) {
        remove_file(graph, path);
    }
    let changed: Vec<String> = target
        .iter()
        .filter(|p| {
            !current.contains(*p) || change_set.modified.contains(*p) || change_set.added.contains(*p)
        })
        .cloned()
        .collect();

    let mut skipped = selection.skipped;
    let mut reparse = Vec::new();
    for (path, content) in checkout.read_many(&changed) {
        let bytes = match content {
            Ok(b) => b,
            Err(e) => {
                remove_file(graph, &path);
                skipped.push(super::SkippedFile {
                    path,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let ts = checkout.timestamp(&path);
        let node = file_node(&path, &bytes, ts);
        match graph.node_by_path(&path) {
            Some(old) if old.raw_content == node.raw_content && old.size_bytes == node.size_bytes => continue,
            Some(_) => {
                graph.upsert_node(node)?;
            }
            None => {
                let parent = ensure_parent(graph, &path, ts)?;
                let id = graph.upsert_node(node)?;
                graph.add_edge(parent, id, EdgeKind::Contains)?;
            }
        }
        reparse.push(path);
    }
    prune_empty_folders(graph);
    parse_paths(graph, &reparse, registry)?;
    let unresolved = resolve_relations(graph, registry)?;
    link_tests(graph, &options.tests)?;
    refresh_root(graph);
    graph.meta.revision = change_set.new_revision.clone();
    graph.touch();
    Ok(collect_diagnostics(graph, unresolved, skipped))
}
