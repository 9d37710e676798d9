use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::graph::{EdgeKind, KnowledgeGraph, NodeId, NodeKind};
use crate::{Error, Result};

/// Undirected weighted graph on `0..n`. `self_loops[i]` holds `A_ii`
/// (twice the internal weight of an aggregated community).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl WeightedGraph {
    /// Parallel edges are summed; `u == v` adds a self-loop of weight `w`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut self_loops = vec![0.0; n];
        for (u, v, w) in edges {
            assert!(u < n && v < n, "edge endpoint out of range");
            if u == v {
                self_loops[u] += 2.0 * w;
            } else {
                *merged.entry((u.min(v), u.max(v))).or_default() += w;
            }
        }
        let mut adj = vec![Vec::new(); n];
        for ((u, v), w) in merged {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for list in &mut adj {
            list.sort_by_key(|e| e.0);
        }
        Self { adj, self_loops }
    }

    pub(crate) fn from_parts(adj: Vec<Vec<(usize, f64)>>, self_loops: Vec<f64>) -> Self {
        Self { adj, self_loops }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Neighbors other than the node itself, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn self_loop(&self, i: usize) -> f64 {
        self.self_loops[i]
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|e| e.1).sum::<f64>() + self.self_loops[i]
    }

    /// `2m`.
    pub fn total_weight(&self) -> f64 {
        (0..self.len()).map(|i| self.degree(i)).sum()
    }
}

/// Files of a graph and the weighted file-to-file relation graph between
/// them. Files are ordered by path.
#[derive(Clone, Debug)]
pub struct FileGraph {
    pub files: Vec<NodeId>,
    pub graph: WeightedGraph,
}

pub const PROJECTED_KINDS: [EdgeKind; 3] = [EdgeKind::Refers, EdgeKind::Calls, EdgeKind::Tests];

/// One unit of weight per Refers, Calls or Tests relation whose endpoints
/// live in two different files.
pub fn project_files(graph: &KnowledgeGraph) -> FileGraph {
    let mut files: Vec<(&str, NodeId)> = graph.nodes_of_kind(NodeKind::File).map(|n| (n.path.as_str(), n.id)).collect();
    files.sort();
    let index: HashMap<NodeId, usize> = files.iter().enumerate().map(|(i, (_, id))| (*id, i)).collect();
    let mut owner: HashMap<NodeId, Option<usize>> = HashMap::new();
    let mut file_of = |id: NodeId| -> Option<usize> {
        *owner
            .entry(id)
            .or_insert_with(|| graph.defining_file(id).and_then(|f| index.get(&f).copied()))
    };
    let mut edges = Vec::new();
    for e in graph.edges().filter(|e| PROJECTED_KINDS.contains(&e.kind)) {
        if let (Some(a), Some(b)) = (file_of(e.src), file_of(e.dst)) {
            if a != b {
                edges.push((a, b, 1.0));
            }
        }
    }
    FileGraph {
        graph: WeightedGraph::from_edges(files.len(), edges),
        files: files.into_iter().map(|(_, id)| id).collect(),
    }
}

/// Per-file signals available to the clustering methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileFeatureView {
    pub file: NodeId,
    pub degree: usize,
    pub weighted_degree: f64,
    /// Degree over `n - 1`.
    pub centrality: f64,
    pub embedding: EmbeddingVector,
    /// Co-change counts with other files, when a history source provides
    /// them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub co_change: Option<BTreeMap<NodeId, u32>>,
}

/// Feature views for every file; fails if a file has no embedding.
pub fn file_features(graph: &KnowledgeGraph, projection: &FileGraph) -> Result<Vec<FileFeatureView>> {
    let n = projection.files.len();
    projection
        .files
        .iter()
        .enumerate()
        .map(|(i, &file)| {
            let node = graph.node(file).ok_or(Error::UnknownNode(file))?;
            let embedding = node
                .search_embedding()
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("file {} has no embedding", node.path)))?;
            let degree = projection.graph.neighbors(i).len();
            Ok(FileFeatureView {
                file,
                degree,
                weighted_degree: projection.graph.degree(i),
                centrality: if n > 1 { degree as f64 / (n - 1) as f64 } else { 0.0 },
                embedding,
                co_change: None,
            })
        })
        .collect()
}
