use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{EdgeKind, KnowledgeGraph, NodeId, NodeKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outgoing,
    Incoming,
    Both,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Outgoing, Direction::Incoming, Direction::Both];
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "outgoing" | "out" => Ok(Direction::Outgoing),
            "incoming" | "in" => Ok(Direction::Incoming),
            "both" => Ok(Direction::Both),
            other => Err(Error::InvalidArgument(format!("unknown direction `{other}`"))),
        }
    }
}

/// Edge kinds, allowed node kinds, direction and depth of a traversal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalConfig {
    pub edge_kinds: BTreeSet<EdgeKind>,
    pub node_kinds: BTreeSet<NodeKind>,
    pub direction: Direction,
    pub depth: usize,
}

impl TraversalConfig {
    pub fn new(
        edge_kinds: impl IntoIterator<Item = EdgeKind>,
        node_kinds: impl IntoIterator<Item = NodeKind>,
        direction: Direction,
        depth: usize,
    ) -> Self {
        Self {
            edge_kinds: edge_kinds.into_iter().collect(),
            node_kinds: node_kinds.into_iter().collect(),
            direction,
            depth,
        }
    }

    /// Every edge and node kind, both directions.
    pub fn everything(depth: usize) -> Self {
        Self::new(EdgeKind::ALL, NodeKind::ALL, Direction::Both, depth)
    }
}

impl KnowledgeGraph {
    /// Nodes reachable from any seed within `depth` hops along `edge_kinds` in
    /// `direction`, restricted to `allowed_kinds`. Seeds are excluded.
    ///
    /// Kind filtering applies to the result only; paths may pass through
    /// nodes of any kind.
    pub fn neighbors(
        &self,
        seeds: &BTreeSet<NodeId>,
        edge_kinds: &BTreeSet<EdgeKind>,
        direction: Direction,
        depth: usize,
        allowed_kinds: &BTreeSet<NodeKind>,
    ) -> Result<BTreeSet<NodeId>> {
        if depth == 0 {
            return Err(Error::InvalidArgument("traversal depth must be >= 1".into()));
        }
        if let Some(missing) = seeds.iter().find(|id| !self.contains_node(**id)) {
            return Err(Error::UnknownNode(*missing));
        }
        let mut visited: HashSet<NodeId> = seeds.iter().copied().collect();
        let mut frontier: Vec<NodeId> = seeds.iter().copied().collect();
        let mut reached = BTreeSet::new();
        for _ in 0..depth {
            let mut next = Vec::new();
            for &id in &frontier {
                let out = matches!(direction, Direction::Outgoing | Direction::Both)
                    .then(|| self.outgoing(id))
                    .into_iter()
                    .flatten();
                let inc = matches!(direction, Direction::Incoming | Direction::Both)
                    .then(|| self.incoming(id))
                    .into_iter()
                    .flatten();
                for (kind, other) in out.chain(inc) {
                    if edge_kinds.contains(&kind) && visited.insert(other) {
                        next.push(other);
                        if allowed_kinds.contains(&self.nodes[&other].kind) {
                            reached.insert(other);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(reached)
    }

    pub fn neighbors_with(
        &self,
        seeds: &BTreeSet<NodeId>,
        config: &TraversalConfig,
    ) -> Result<BTreeSet<NodeId>> {
        self.neighbors(
            seeds,
            &config.edge_kinds,
            config.direction,
            config.depth,
            &config.node_kinds,
        )
    }
}
