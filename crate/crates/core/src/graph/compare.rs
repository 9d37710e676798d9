//! Structural comparison that ignores node ids and timestamps.
//!
//! Incrementally updated graphs allocate ids differently from fresh builds,
//! so equivalence is decided on identity keys.

use std::collections::{BTreeMap, BTreeSet};

use chrono::DateTime;

use super::{EdgeKind, FileRecord, KnowledgeGraph, Node, NodeId, NodeKey};

type KeyedEdge = (NodeKey, NodeKey, EdgeKind);

fn canonical_nodes(g: &KnowledgeGraph) -> BTreeMap<NodeKey, Node> {
    g.nodes()
        .map(|n| {
            let mut n = n.clone();
            n.id = NodeId(0);
            n.last_modified = DateTime::UNIX_EPOCH;
            (n.key(), n)
        })
        .collect()
}

fn canonical_edges(g: &KnowledgeGraph) -> BTreeSet<KeyedEdge> {
    g.edges()
        .map(|e| {
            (
                g.node(e.src).expect("dangling edge").key(),
                g.node(e.dst).expect("dangling edge").key(),
                e.kind,
            )
        })
        .collect()
}

fn records(g: &KnowledgeGraph) -> BTreeMap<&str, &FileRecord> {
    g.file_records().collect()
}

/// Human-readable differences between two graphs, ignoring ids, timestamps
/// and graph metadata other than revision and embedding dimension. Empty
/// means equivalent.
pub fn differences(a: &KnowledgeGraph, b: &KnowledgeGraph) -> Vec<String> {
    let mut out = Vec::new();
    if a.meta.revision != b.meta.revision {
        out.push(format!("revision {} != {}", a.meta.revision, b.meta.revision));
    }
    if a.meta.embedding_dim != b.meta.embedding_dim {
        out.push(format!(
            "embedding_dim {:?} != {:?}",
            a.meta.embedding_dim, b.meta.embedding_dim
        ));
    }
    let (na, nb) = (canonical_nodes(a), canonical_nodes(b));
    for (key, node) in &na {
        match nb.get(key) {
            None => out.push(format!("node only in left: {key:?}")),
            Some(other) if other != node => out.push(format!("node differs: {key:?}")),
            _ => {}
        }
    }
    for key in nb.keys().filter(|k| !na.contains_key(*k)) {
        out.push(format!("node only in right: {key:?}"));
    }
    let (ea, eb) = (canonical_edges(a), canonical_edges(b));
    for e in ea.difference(&eb) {
        out.push(format!("edge only in left: {e:?}"));
    }
    for e in eb.difference(&ea) {
        out.push(format!("edge only in right: {e:?}"));
    }
    if records(a) != records(b) {
        out.push("file parse records differ".into());
    }
    out
}

pub fn equivalent(a: &KnowledgeGraph, b: &KnowledgeGraph) -> bool {
    differences(a, b).is_empty()
}
