use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::preprocess::QueryBundle;
use crate::embedding::EmbeddingVector;
use crate::graph::{KnowledgeGraph, Node, NodeId, NodeKind};
use crate::{Error, Result};

/// How several query embeddings combine into one node score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectivePolicy {
    /// Each node takes its best similarity over all query embeddings.
    #[default]
    PerNodeMax,
    /// Only the query embedding with the highest top-1 similarity is used.
    WholeQueryWinner,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredNode {
    pub node: NodeId,
    pub score: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SemanticOutcome {
    pub hits: Vec<ScoredNode>,
    pub warnings: Vec<String>,
}

pub fn default_semantic_kinds() -> BTreeSet<NodeKind> {
    [NodeKind::File, NodeKind::Class, NodeKind::Function, NodeKind::MemberFunction]
        .into_iter()
        .collect()
}

/// Score desc, then path asc, then id asc.
pub fn rank_order(graph: &KnowledgeGraph, a: &ScoredNode, b: &ScoredNode) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| graph.node(a.node).map(|n| &n.path).cmp(&graph.node(b.node).map(|n| &n.path)))
        .then_with(|| a.node.cmp(&b.node))
}

fn eligible<'g>(graph: &'g KnowledgeGraph, kinds: &BTreeSet<NodeKind>) -> Vec<(&'g Node, &'g EmbeddingVector)> {
    graph
        .nodes()
        .filter(|n| kinds.contains(&n.kind))
        .filter_map(|n| n.search_embedding().map(|e| (n, e)))
        .collect()
}

/// Best similarity of `embedding` over the query embeddings.
pub fn max_similarity(queries: &[EmbeddingVector], embedding: &EmbeddingVector) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for q in queries {
        best = best.max(q.dot(embedding)?);
    }
    Ok(best)
}

/// Ranks enriched nodes of `kinds` by similarity to the query bundle.
pub fn semantic_search(
    graph: &KnowledgeGraph,
    bundle: &QueryBundle,
    kinds: &BTreeSet<NodeKind>,
    limit: usize,
    policy: SelectivePolicy,
) -> Result<SemanticOutcome> {
    if limit == 0 {
        return Err(Error::InvalidArgument("semantic search limit must be >= 1".into()));
    }
    if bundle.embeddings.is_empty() {
        return Err(Error::InvalidArgument("query bundle has no embeddings".into()));
    }
    let pool = eligible(graph, kinds);
    if pool.is_empty() {
        return Ok(SemanticOutcome {
            hits: Vec::new(),
            warnings: vec!["semantic: no enriched nodes in scope".into()],
        });
    }
    let mut queries: &[EmbeddingVector] = &bundle.embeddings;
    if policy == SelectivePolicy::WholeQueryWinner && queries.len() > 1 {
        let mut winner = 0;
        let mut winner_top = f64::NEG_INFINITY;
        for (i, q) in bundle.embeddings.iter().enumerate() {
            let mut top = f64::NEG_INFINITY;
            for (_, e) in &pool {
                top = top.max(q.dot(e)?);
            }
            if top > winner_top {
                winner = i;
                winner_top = top;
            }
        }
        queries = std::slice::from_ref(&bundle.embeddings[winner]);
    }
    let mut scored = Vec::with_capacity(pool.len());
    for (node, e) in &pool {
        scored.push(ScoredNode {
            node: node.id,
            score: max_similarity(queries, e)?,
        });
    }
    let order = |a: &ScoredNode, b: &ScoredNode| rank_order(graph, a, b);
    if scored.len() > limit {
        scored.select_nth_unstable_by(limit - 1, order);
        scored.truncate(limit);
    }
    scored.sort_by(order);
    Ok(SemanticOutcome {
        hits: scored,
        warnings: Vec::new(),
    })
}
