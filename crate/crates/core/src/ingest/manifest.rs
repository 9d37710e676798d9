//! Expected per-revision counts for fixture repositories.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{EdgeKind, GraphStats, NodeKind};
use crate::lang::FileCategory;
use crate::Result;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionCounts {
    pub nodes: BTreeMap<NodeKind, usize>,
    pub edges: BTreeMap<EdgeKind, usize>,
    #[serde(default)]
    pub file_types: BTreeMap<FileCategory, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_edges: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub repository: String,
    pub revisions: BTreeMap<String, RevisionCounts>,
}

impl FixtureManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl RevisionCounts {
    pub fn from_stats(stats: &GraphStats) -> Self {
        Self {
            nodes: stats.nodes.clone(),
            edges: stats.edges.clone(),
            file_types: stats.file_types.clone(),
            total_nodes: Some(stats.total_nodes),
            total_edges: Some(stats.total_edges),
        }
    }

    /// Human-readable differences between the expectation and `stats`.
    pub fn mismatches(&self, stats: &GraphStats) -> Vec<String> {
        let mut out = Vec::new();
        for (k, want) in &self.nodes {
            let got = stats.node_count(*k);
            if got != *want {
                out.push(format!("{k} nodes: expected {want}, got {got}"));
            }
        }
        for (k, want) in &self.edges {
            let got = stats.edge_count(*k);
            if got != *want {
                out.push(format!("{k} edges: expected {want}, got {got}"));
            }
        }
        for (k, want) in &self.file_types {
            let got = stats.file_type_count(*k);
            if got != *want {
                out.push(format!("{k:?} files: expected {want}, got {got}"));
            }
        }
        if let Some(want) = self.total_nodes.filter(|w| *w != stats.total_nodes) {
            out.push(format!("total nodes: expected {want}, got {}", stats.total_nodes));
        }
        if let Some(want) = self.total_edges.filter(|w| *w != stats.total_edges) {
            out.push(format!("total edges: expected {want}, got {}", stats.total_edges));
        }
        out
    }
}
