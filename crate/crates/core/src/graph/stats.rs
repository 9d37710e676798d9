use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EdgeKind, KnowledgeGraph, NodeKind};
use crate::lang::{category_for_path, FileCategory};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: BTreeMap<NodeKind, usize>,
    pub edges: BTreeMap<EdgeKind, usize>,
    pub total_nodes: usize,
    pub total_edges: usize,
    pub file_types: BTreeMap<FileCategory, usize>,
}

impl GraphStats {
    pub fn node_count(&self, kind: NodeKind) -> usize {
        self.nodes.get(&kind).copied().unwrap_or(0)
    }

    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        self.edges.get(&kind).copied().unwrap_or(0)
    }

    pub fn file_type_count(&self, category: FileCategory) -> usize {
        self.file_types.get(&category).copied().unwrap_or(0)
    }

    /// Plain-text rendering used by the CLI.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("Nodes: {}\n", self.total_nodes));
        for (kind, n) in &self.nodes {
            out.push_str(&format!("  {kind:<15}{n}\n"));
        }
        out.push_str(&format!("Relations: {}\n", self.total_edges));
        for (kind, n) in &self.edges {
            out.push_str(&format!("  {kind:<15}{n}\n"));
        }
        out.push_str("File types:\n");
        for (cat, n) in &self.file_types {
            out.push_str(&format!("  {:<15}{n}\n", format!("{cat:?}").to_lowercase()));
        }
        out
    }
}

impl KnowledgeGraph {
    pub fn stats(&self) -> GraphStats {
        let mut nodes: BTreeMap<NodeKind, usize> = NodeKind::ALL.iter().map(|k| (*k, 0)).collect();
        let mut edges: BTreeMap<EdgeKind, usize> = EdgeKind::ALL.iter().map(|k| (*k, 0)).collect();
        let mut file_types: BTreeMap<FileCategory, usize> = [
            FileCategory::Source,
            FileCategory::Documentation,
            FileCategory::Other,
        ]
        .into_iter()
        .map(|c| (c, 0))
        .collect();
        for node in self.nodes() {
            *nodes.entry(node.kind).or_default() += 1;
            if node.kind == NodeKind::File {
                *file_types.entry(category_for_path(&node.path)).or_default() += 1;
            }
        }
        for edge in self.edges() {
            *edges.entry(edge.kind).or_default() += 1;
        }
        GraphStats {
            total_nodes: nodes.values().sum(),
            total_edges: edges.values().sum(),
            nodes,
            edges,
            file_types,
        }
    }
}
