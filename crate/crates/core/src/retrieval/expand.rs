use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::graph::traverse::TraversalConfig;
use crate::graph::{Direction, EdgeKind, KnowledgeGraph, NodeId, NodeKind};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraversalMode {
    Off,
    /// Callers of callable hits, then the files defining every callable.
    #[default]
    Default,
    Custom(TraversalConfig),
}

fn check_seeds<'a>(graph: &KnowledgeGraph, seeds: impl IntoIterator<Item = &'a NodeId>) -> Result<()> {
    for id in seeds {
        if !graph.contains_node(*id) {
            return Err(Error::UnknownNode(*id));
        }
    }
    Ok(())
}

fn defining_files(graph: &KnowledgeGraph, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
    graph
        .incoming(id)
        .filter(|&(k, src)| k == EdgeKind::Implements && graph.node(src).is_some_and(|n| n.kind == NodeKind::File))
        .map(|(_, src)| src)
}

fn is_callable(graph: &KnowledgeGraph, id: NodeId) -> bool {
    graph.node(id).is_some_and(|n| n.kind.is_callable())
}

/// Nodes added to `hits` by traversal; never contains a hit.
pub fn traverse_expand(graph: &KnowledgeGraph, hits: &BTreeSet<NodeId>, mode: &TraversalMode) -> Result<BTreeSet<NodeId>> {
    check_seeds(graph, hits)?;
    match mode {
        TraversalMode::Off => Ok(BTreeSet::new()),
        TraversalMode::Custom(config) => graph.neighbors_with(hits, config),
        TraversalMode::Default => {
            let seeds: Vec<(NodeId, f64)> = hits.iter().map(|&h| (h, 0.0)).collect();
            Ok(expand_scored(graph, &seeds, mode)?.into_keys().collect())
        }
    }
}

/// Like [`traverse_expand`], with each addition carrying the best score of
/// the seeds it was reached from and those seeds as evidence.
pub fn expand_scored(
    graph: &KnowledgeGraph,
    seeds: &[(NodeId, f64)],
    mode: &TraversalMode,
) -> Result<BTreeMap<NodeId, (f64, BTreeSet<NodeId>)>> {
    check_seeds(graph, seeds.iter().map(|(id, _)| id))?;
    let hit_set: BTreeSet<NodeId> = seeds.iter().map(|(id, _)| *id).collect();
    let mut out: BTreeMap<NodeId, (f64, BTreeSet<NodeId>)> = BTreeMap::new();
    let credit = |out: &mut BTreeMap<NodeId, (f64, BTreeSet<NodeId>)>, node: NodeId, score: f64, origin: NodeId| {
        if hit_set.contains(&node) {
            return;
        }
        let entry = out.entry(node).or_insert((f64::NEG_INFINITY, BTreeSet::new()));
        entry.0 = entry.0.max(score);
        entry.1.insert(origin);
    };
    match mode {
        TraversalMode::Off => {}
        TraversalMode::Default => {
            let mut functions: Vec<(NodeId, f64, NodeId)> = Vec::new();
            for &(hit, score) in seeds {
                if !is_callable(graph, hit) {
                    continue;
                }
                functions.push((hit, score, hit));
                for (kind, caller) in graph.incoming(hit) {
                    if kind == EdgeKind::Calls && is_callable(graph, caller) {
                        credit(&mut out, caller, score, hit);
                        functions.push((caller, score, hit));
                    }
                }
            }
            for (function, score, origin) in functions {
                for file in defining_files(graph, function) {
                    credit(&mut out, file, score, origin);
                }
            }
        }
        TraversalMode::Custom(config) => {
            if config.depth == 0 {
                return Err(Error::InvalidArgument("traversal depth must be >= 1".into()));
            }
            let mut order: Vec<(NodeId, f64)> = seeds.to_vec();
            order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            // Remaining depth budget with which a node was already expanded
            // by an earlier (better scored) seed.
            let mut budget: HashMap<NodeId, usize> = HashMap::new();
            for (seed, score) in order {
                let mut queue = VecDeque::from([(seed, config.depth)]);
                if budget.get(&seed).is_some_and(|&b| b >= config.depth) {
                    continue;
                }
                budget.insert(seed, config.depth);
                while let Some((id, left)) = queue.pop_front() {
                    if left == 0 {
                        continue;
                    }
                    for (kind, other) in step(graph, id, config.direction) {
                        if !config.edge_kinds.contains(&kind) {
                            continue;
                        }
                        let remaining = left - 1;
                        if graph.node(other).is_some_and(|n| config.node_kinds.contains(&n.kind)) {
                            credit(&mut out, other, score, seed);
                        }
                        if budget.get(&other).is_some_and(|&b| b >= remaining) {
                            continue;
                        }
                        budget.insert(other, remaining);
                        queue.push_back((other, remaining));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn step(graph: &KnowledgeGraph, id: NodeId, direction: Direction) -> Vec<(EdgeKind, NodeId)> {
    let mut v = Vec::new();
    if matches!(direction, Direction::Outgoing | Direction::Both) {
        v.extend(graph.outgoing(id));
    }
    if matches!(direction, Direction::Incoming | Direction::Both) {
        v.extend(graph.incoming(id));
    }
    v
}
