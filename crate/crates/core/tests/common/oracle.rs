//! Reference implementations that share no code with the library.

use std::collections::{BTreeSet, HashMap, VecDeque};

use repograph_core::graph::traverse::TraversalConfig;
use repograph_core::graph::Direction;
use repograph_core::{EdgeKind, KnowledgeGraph, NodeId, NodeKind};

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Shortest-hop distances from the seed set over an adjacency rebuilt from
/// the edge list.
pub fn bfs(graph: &KnowledgeGraph, seeds: &BTreeSet<NodeId>, config: &TraversalConfig) -> BTreeSet<NodeId> {
    let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for e in graph.edges() {
        if !config.edge_kinds.contains(&e.kind) {
            continue;
        }
        if matches!(config.direction, Direction::Outgoing | Direction::Both) {
            adj.entry(e.src).or_default().push(e.dst);
        }
        if matches!(config.direction, Direction::Incoming | Direction::Both) {
            adj.entry(e.dst).or_default().push(e.src);
        }
    }
    let mut dist: HashMap<NodeId, usize> = seeds.iter().map(|&s| (s, 0)).collect();
    let mut queue: VecDeque<NodeId> = seeds.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        if d == config.depth {
            continue;
        }
        for &m in adj.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            if !dist.contains_key(&m) {
                dist.insert(m, d + 1);
                queue.push_back(m);
            }
        }
    }
    dist.into_iter()
        .filter(|(n, d)| *d >= 1 && config.node_kinds.contains(&graph.node(*n).unwrap().kind))
        .map(|(n, _)| n)
        .collect()
}

/// Callers of callable hits plus File definers of every callable involved.
pub fn default_expansion(graph: &KnowledgeGraph, hits: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let callable = |n: NodeId| matches!(graph.node(n).unwrap().kind, NodeKind::Function | NodeKind::MemberFunction);
    let mut functions: BTreeSet<NodeId> = hits.iter().copied().filter(|&h| callable(h)).collect();
    let callers: Vec<NodeId> = graph
        .edges()
        .filter(|e| e.kind == EdgeKind::Calls && functions.contains(&e.dst) && callable(e.src))
        .map(|e| e.src)
        .collect();
    functions.extend(callers.iter().copied());
    let mut out: BTreeSet<NodeId> = callers.into_iter().collect();
    for e in graph.edges() {
        if e.kind == EdgeKind::Implements && functions.contains(&e.dst) && graph.node(e.src).unwrap().kind == NodeKind::File {
            out.insert(e.src);
        }
    }
    out.retain(|n| !hits.contains(n));
    out
}

/// Full scan over every enriched node of `kinds`; (score desc, path, id).
pub fn brute_force_rank(
    graph: &KnowledgeGraph,
    query: &[f32],
    kinds: &BTreeSet<NodeKind>,
    limit: usize,
) -> Vec<(NodeId, f64)> {
    let mut all: Vec<(NodeId, f64, String)> = graph
        .nodes()
        .filter(|n| kinds.contains(&n.kind))
        .filter_map(|n| {
            let e = n.description_embedding.as_ref().or(n.code_embedding.as_ref())?;
            let s: f64 = e.as_slice().iter().zip(query).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum();
            Some((n.id, s, n.path.clone()))
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)));
    all.into_iter().take(limit).map(|(n, s, _)| (n, s)).collect()
}

pub fn recall_at_k(ranked: &[&str], truth: &BTreeSet<&str>, k: usize) -> f64 {
    let hit = ranked.iter().take(k).filter(|p| truth.contains(*p)).count();
    hit as f64 / truth.len() as f64
}
