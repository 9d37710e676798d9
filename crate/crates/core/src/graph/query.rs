//! Closed set of read-only graph queries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Edge, EdgeKind, GraphStats, KnowledgeGraph, LineSpan, Node, NodeId, NodeKind};
use super::traverse::Direction;
use crate::{Error, Result};

pub const ALLOWED_REQUESTS: &[&str] = &[
    r#"{"type":"node_by_path","path":STRING}"#,
    r#"{"type":"nodes_by_kind","kind":NODE_KIND}"#,
    r#"{"type":"neighbors","seeds":[ID],"edge_kinds":[EDGE_KIND],"direction":"outgoing|incoming|both","depth":N,"allowed_kinds":[NODE_KIND]}"#,
    r#"{"type":"subgraph_extract","nodes":[ID]}"#,
    r#"{"type":"stats"}"#,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReadRequest {
    NodeByPath {
        path: String,
    },
    NodesByKind {
        kind: NodeKind,
    },
    Neighbors {
        seeds: Vec<NodeId>,
        edge_kinds: Vec<EdgeKind>,
        direction: Direction,
        depth: usize,
        allowed_kinds: Vec<NodeKind>,
    },
    SubgraphExtract {
        nodes: Vec<NodeId>,
    },
    Stats {},
}

impl ReadRequest {
    /// Validates a JSON request; failures list the accepted request forms.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let request: ReadRequest =
            serde_json::from_value(value.clone()).map_err(|e| Error::InvalidRequest {
                message: e.to_string(),
                allowed: ALLOWED_REQUESTS,
            })?;
        if let ReadRequest::Neighbors { depth: 0, .. } = request {
            return Err(Error::InvalidRequest {
                message: "depth must be >= 1".into(),
                allowed: ALLOWED_REQUESTS,
            });
        }
        Ok(request)
    }
}

/// Node fields returned by queries: identity and provenance, no embeddings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    pub qualified_name: String,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line_span: Option<LineSpan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl From<&Node> for NodeSummary {
    fn from(n: &Node) -> Self {
        Self {
            id: n.id,
            kind: n.kind,
            name: n.name.clone(),
            qualified_name: n.qualified_name.clone(),
            path: n.path.clone(),
            language: n.language.clone(),
            signature: n.signature.clone(),
            line_span: n.line_span,
            description: n.description.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReadResult {
    Nodes { nodes: Vec<NodeSummary> },
    Subgraph { nodes: Vec<NodeSummary>, edges: Vec<Edge> },
    Stats { stats: GraphStats },
}

impl KnowledgeGraph {
    /// Answers a read request. Takes `&self`, so it cannot mutate the graph.
    pub fn read_query(&self, request: &ReadRequest) -> Result<ReadResult> {
        match request {
            ReadRequest::NodeByPath { path } => {
                let node = self
                    .node_by_path(path)
                    .ok_or_else(|| Error::InvalidArgument(format!("no node at path `{path}`")))?;
                Ok(ReadResult::Nodes {
                    nodes: vec![node.into()],
                })
            }
            ReadRequest::NodesByKind { kind } => Ok(ReadResult::Nodes {
                nodes: self.nodes_of_kind(*kind).map(Into::into).collect(),
            }),
            ReadRequest::Neighbors {
                seeds,
                edge_kinds,
                direction,
                depth,
                allowed_kinds,
            } => {
                let found = self.neighbors(
                    &seeds.iter().copied().collect(),
                    &edge_kinds.iter().copied().collect(),
                    *direction,
                    *depth,
                    &allowed_kinds.iter().copied().collect(),
                )?;
                Ok(ReadResult::Nodes {
                    nodes: found.iter().map(|id| (&self.nodes[id]).into()).collect(),
                })
            }
            ReadRequest::SubgraphExtract { nodes } => {
                let set: BTreeSet<NodeId> = nodes.iter().copied().collect();
                let (nodes, edges) = self.induced_subgraph(&set)?;
                Ok(ReadResult::Subgraph {
                    nodes: nodes.into_iter().map(Into::into).collect(),
                    edges,
                })
            }
            ReadRequest::Stats {} => Ok(ReadResult::Stats { stats: self.stats() }),
        }
    }

    /// Nodes of `ids` and every edge with both endpoints inside the set.
    pub fn induced_subgraph(&self, ids: &BTreeSet<NodeId>) -> Result<(Vec<&Node>, Vec<Edge>)> {
        if let Some(missing) = ids.iter().find(|id| !self.contains_node(**id)) {
            return Err(Error::UnknownNode(*missing));
        }
        let nodes = ids.iter().map(|id| &self.nodes[id]).collect();
        let mut edges = Vec::new();
        for &id in ids {
            for (kind, dst) in self.outgoing(id) {
                if ids.contains(&dst) {
                    edges.push(Edge { src: id, dst, kind });
                }
            }
        }
        edges.sort();
        Ok((nodes, edges))
    }
}
