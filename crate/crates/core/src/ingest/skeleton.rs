//! Root, Folder and File nodes linked by Contains.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};

use super::checkout::Checkout;
use super::filter::{IngestFilter, SkippedFile};
use crate::graph::{EdgeKind, EnrichmentStatus, KnowledgeGraph, Node, NodeId, NodeKey, NodeKind};
use crate::lang::{category_for_path, language_for_path, FileCategory};
use crate::Result;

/// Bytes inspected when sniffing for binary content.
const BINARY_SNIFF: usize = 8000;

pub fn decode_text(bytes: &[u8]) -> Option<String> {
    if bytes[..bytes.len().min(BINARY_SNIFF)].contains(&0) {
        return None;
    }
    String::from_utf8(bytes.to_vec()).ok()
}

pub(crate) fn parent_dir(path: &str) -> Option<&str> {
    path.rfind('/').map(|i| &path[..i])
}

pub fn file_node(path: &str, bytes: &[u8], ts: DateTime<Utc>) -> Node {
    let mut node = Node::file(path, language_for_path(path), bytes.len() as u64).with_timestamp(ts);
    node.raw_content = decode_text(bytes);
    node
}

/// Creates missing ancestor folders of `path` and returns the id of its
/// direct parent (a Folder or the Root).
pub(crate) fn ensure_parent(graph: &mut KnowledgeGraph, path: &str, ts: DateTime<Utc>) -> Result<NodeId> {
    let root = graph
        .root()
        .map(|r| r.id)
        .ok_or_else(|| crate::Error::Schema("graph has no Root".into()))?;
    let Some(dir) = parent_dir(path) else {
        return Ok(root);
    };
    let mut parent = root;
    let mut prefix = String::new();
    for seg in dir.split('/') {
        if !prefix.is_empty() {
            prefix.push('/');
        }
        prefix.push_str(seg);
        let key = NodeKey {
            kind: NodeKind::Folder,
            path: prefix.clone(),
            qualified_name: String::new(),
        };
        let id = match graph.lookup(&key) {
            Some(id) => id,
            None => {
                let id = graph.upsert_node(Node::folder(prefix.clone()).with_timestamp(ts))?;
                graph.add_edge(parent, id, EdgeKind::Contains)?;
                id
            }
        };
        parent = id;
    }
    Ok(parent)
}

/// Removes folders that no longer contain any file.
pub(crate) fn prune_empty_folders(graph: &mut KnowledgeGraph) {
    let live: BTreeSet<String> = graph
        .file_paths()
        .flat_map(|p| {
            let mut dirs = Vec::new();
            let mut cur = p;
            while let Some(d) = parent_dir(cur) {
                dirs.push(d.to_string());
                cur = d;
            }
            dirs
        })
        .collect();
    let doomed: Vec<NodeId> = graph
        .nodes_of_kind(NodeKind::Folder)
        .filter(|f| !live.contains(&f.path))
        .map(|f| f.id)
        .collect();
    for id in doomed {
        graph.remove_node(id);
    }
}

/// Scope-and-technology summary stored on the Root.
pub fn root_description(graph: &KnowledgeGraph) -> String {
    let name = graph.root().map(|r| r.name.clone()).unwrap_or_default();
    let mut langs: BTreeMap<&str, usize> = BTreeMap::new();
    let mut files = 0usize;
    for f in graph.nodes_of_kind(NodeKind::File) {
        files += 1;
        if category_for_path(&f.path) != FileCategory::Other {
            *langs.entry(f.language.as_deref().unwrap_or("Other")).or_default() += 1;
        }
    }
    let folders = graph.nodes_of_kind(NodeKind::Folder).count();
    let mut ranked: Vec<(&str, usize)> = langs.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let tech = if ranked.is_empty() {
        "none detected".to_string()
    } else {
        ranked
            .iter()
            .map(|(l, n)| format!("{l} ({n})"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("Repository {name}: {files} files in {folders} folders. Technologies: {tech}.")
}

pub(crate) fn refresh_root(graph: &mut KnowledgeGraph) {
    let desc = root_description(graph);
    if let Some(id) = graph.root().map(|r| r.id) {
        let root = graph.node_mut(id).expect("root exists");
        root.description = Some(desc);
        root.enrichment = EnrichmentStatus::Done;
    }
}

#[derive(Debug)]
pub struct Skeleton {
    pub graph: KnowledgeGraph,
    pub skipped: Vec<SkippedFile>,
}

pub fn build_skeleton(checkout: &dyn Checkout, repo_url: &str, filter: &IngestFilter) -> Result<Skeleton> {
    let selection = filter.select(checkout)?;
    let mut graph = KnowledgeGraph::new(repo_url, checkout.revision());
    let root_ts = checkout.timestamp("");
    let mut root = Node::root(checkout.repo_name()).with_timestamp(root_ts);
    root.enrichment = EnrichmentStatus::Done;
    graph.upsert_node(root)?;

    let paths: Vec<String> = selection.files.iter().map(|f| f.path.clone()).collect();
    let mut skipped = selection.skipped;
    for (path, content) in checkout.read_many(&paths) {
        match content {
            Ok(bytes) => {
                let ts = checkout.timestamp(&path);
                let parent = ensure_parent(&mut graph, &path, ts)?;
                let id = graph.upsert_node(file_node(&path, &bytes, ts))?;
                graph.add_edge(parent, id, EdgeKind::Contains)?;
            }
            Err(e) => {
                tracing::warn!("skipping unreadable file {path}: {e}");
                skipped.push(SkippedFile {
                    path,
                    reason: e.to_string(),
                });
            }
        }
    }
    refresh_root(&mut graph);
    Ok(Skeleton { graph, skipped })
}
