//! Tests edges from test artifacts to the code they exercise.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::parse::file_entities;
use crate::graph::{EdgeKind, KnowledgeGraph, NodeId, NodeKind};
use crate::lang::is_source_path;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestHeuristics {
    /// Directory names that mark everything below them as test code.
    pub test_dirs: Vec<String>,
    /// File stems never linked (package markers, fixtures).
    pub skip_stems: Vec<String>,
    pub function_prefix: String,
}

impl Default for TestHeuristics {
    fn default() -> Self {
        Self {
            test_dirs: ["test", "tests", "testing", "__tests__", "spec", "specs"]
                .map(String::from)
                .to_vec(),
            skip_stems: ["__init__", "conftest", "__main__", "index", "mod"].map(String::from).to_vec(),
            function_prefix: "test_".into(),
        }
    }
}

fn stem(path: &str) -> &str {
    let name = path.rsplit('/').next().unwrap_or(path);
    match name.rfind('.') {
        Some(i) if i > 0 => &name[..i],
        _ => name,
    }
}

/// Name with test prefixes/suffixes removed, if the name itself marks a test.
pub fn strip_test_name(stem: &str) -> Option<&str> {
    let stripped = stem
        .strip_prefix("test_")
        .or_else(|| stem.strip_suffix("_tests"))
        .or_else(|| stem.strip_suffix("_test"))
        .or_else(|| stem.strip_suffix(".test"))
        .or_else(|| stem.strip_suffix(".spec"))
        .or_else(|| stem.strip_suffix("Tests"))
        .or_else(|| stem.strip_suffix("Test"))?;
    (!stripped.is_empty()).then_some(stripped)
}

impl TestHeuristics {
    pub fn is_test_path(&self, path: &str) -> bool {
        let mut segs: Vec<&str> = path.split('/').collect();
        segs.pop();
        segs.iter().any(|s| self.test_dirs.iter().any(|d| d == s)) || strip_test_name(stem(path)).is_some()
    }

    /// Name used to find the tested file.
    pub fn subject_name<'a>(&self, path: &'a str) -> &'a str {
        let s = stem(path);
        strip_test_name(s).unwrap_or(s)
    }
}

fn dir_segments<'a>(path: &'a str, h: &TestHeuristics) -> BTreeSet<&'a str> {
    let mut segs: Vec<&str> = path.split('/').collect();
    segs.pop();
    segs.into_iter()
        .filter(|s| *s != "src" && !h.test_dirs.iter().any(|d| d == s))
        .collect()
}

/// Recomputes every Tests edge. Returns the number of edges.
pub fn link_tests(graph: &mut KnowledgeGraph, h: &TestHeuristics) -> Result<usize> {
    graph.clear_edges_of_kind(&[EdgeKind::Tests]);
    let mut subjects: BTreeMap<&str, Vec<(NodeId, &str)>> = BTreeMap::new();
    let mut tests: Vec<(NodeId, &str)> = Vec::new();
    for f in graph.nodes_of_kind(NodeKind::File) {
        if !is_source_path(&f.path) {
            continue;
        }
        if h.is_test_path(&f.path) {
            tests.push((f.id, &f.path));
        } else {
            subjects.entry(stem(&f.path)).or_default().push((f.id, &f.path));
        }
    }
    let mut callables_by_name: BTreeMap<&str, Vec<NodeId>> = BTreeMap::new();
    for n in graph.nodes().filter(|n| n.kind.is_callable()) {
        if !h.is_test_path(&n.path) {
            callables_by_name.entry(&n.name).or_default().push(n.id);
        }
    }

    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for (test_id, test_path) in tests {
        let subject = h.subject_name(test_path);
        let targets: Vec<NodeId> = if h.skip_stems.iter().any(|s| s == subject) {
            Vec::new()
        } else {
            let test_dirs = dir_segments(test_path, h);
            let candidates = subjects.get(subject).map(Vec::as_slice).unwrap_or_default();
            let score = |p: &str| dir_segments(p, h).intersection(&test_dirs).count();
            let best = candidates.iter().map(|(_, p)| score(p)).max();
            candidates
                .iter()
                .filter(|(_, p)| Some(score(p)) == best)
                .map(|(id, _)| *id)
                .collect()
        };
        for &t in &targets {
            edges.insert((test_id, t));
        }
        let target_fns: Vec<NodeId> = targets.iter().flat_map(|&t| file_entities(graph, t)).collect();
        for test_fn in file_entities(graph, test_id) {
            let node = graph.node(test_fn).expect("entity exists");
            if !node.kind.is_callable() {
                continue;
            }
            let Some(name) = node.name.strip_prefix(&h.function_prefix).filter(|n| !n.is_empty()) else {
                continue;
            };
            let local: Vec<NodeId> = target_fns
                .iter()
                .copied()
                .filter(|&id| graph.node(id).is_some_and(|n| n.kind.is_callable() && n.name.trim_start_matches('_') == name))
                .collect();
            if !local.is_empty() {
                edges.extend(local.into_iter().map(|id| (test_fn, id)));
            } else if let Some([only]) = callables_by_name.get(name).map(Vec::as_slice) {
                edges.insert((test_fn, *only));
            }
        }
    }
    for &(s, d) in &edges {
        graph.add_edge(s, d, EdgeKind::Tests)?;
    }
    Ok(edges.len())
}
