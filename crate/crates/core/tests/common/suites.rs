//! Constructed evaluation suites with hand-computable medians.

use std::collections::{BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use repograph_core::eval::TestCase;
use repograph_core::graph::EnrichmentStatus;
use repograph_core::synthetic::random_unit;
use repograph_core::{EdgeKind, EmbeddingVector, KnowledgeGraph, LineSpan, Node, NodeId, NodeKind};

use super::TableEmbedder;

pub const SUITE_DIM: usize = 32;

pub struct Suite {
    pub graph: KnowledgeGraph,
    pub cases: Vec<TestCase>,
    pub embedder: TableEmbedder,
}

fn negate(e: &EmbeddingVector) -> EmbeddingVector {
    EmbeddingVector::from_unit(e.as_slice().iter().map(|x| -x).collect()).unwrap()
}

fn add(g: &mut KnowledgeGraph, parent: NodeId, mut node: Node, e: EmbeddingVector) -> NodeId {
    node.description = Some(format!("{} {}", node.kind, node.path));
    node.description_embedding = Some(e);
    node.enrichment = EnrichmentStatus::Done;
    let kind = if node.kind == NodeKind::File { EdgeKind::Contains } else { EdgeKind::Implements };
    let id = g.upsert_node(node).unwrap();
    g.add_edge(parent, id, kind).unwrap();
    id
}

fn case(i: u64, text: String, truth: [&str; 2]) -> TestCase {
    TestCase {
        repo: "suite/repo".into(),
        revision: "r0".into(),
        issue_id: i,
        issue_text: text,
        pr_id: 1000 + i,
        ground_truth: truth.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
        created_at: None,
    }
}

fn base(rng: &mut ChaCha8Rng, noise: usize) -> (KnowledgeGraph, NodeId) {
    let mut g = KnowledgeGraph::new("suite/repo", "r0").with_embedding_dim(SUITE_DIM);
    let root = g.upsert_node(Node::root("suite")).unwrap();
    for i in 0..noise {
        add(&mut g, root, Node::file(format!("noise/n{i:02}.py"), "Python", 10), random_unit(rng, SUITE_DIM));
    }
    (g, root)
}

/// Each case names one ground-truth file in its text; that file points away
/// from the query, while the other ground-truth file matches it exactly.
/// With k = 5: recall@5 is 0.5 without discovery and 1.0 with it.
pub fn discovery_suite(seed: u64, cases: usize) -> Suite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut g, root) = base(&mut rng, 40);
    let mut table = HashMap::new();
    let mut out = Vec::new();
    for i in 0..cases {
        let q = random_unit(&mut rng, SUITE_DIM);
        let mentioned = format!("pkg/mentioned_{i:02}.py");
        let similar = format!("pkg/similar_{i:02}.py");
        add(&mut g, root, Node::file(&mentioned, "Python", 10), negate(&q));
        add(&mut g, root, Node::file(&similar, "Python", 10), q.clone());
        let text = format!("Crash on startup in {mentioned} (case {i})");
        table.insert(text.clone(), q);
        out.push(case(i as u64 + 1, text, [&mentioned, &similar]));
    }
    Suite {
        graph: g,
        cases: out,
        embedder: TableEmbedder { dim: SUITE_DIM, table },
    }
}

/// Each case plants `app_i.caller` calling `lib_i.callee`. Only the callee
/// matches the query; everything in `app_i.py` points away from it.
/// With k = 4: recall@4 is 0.5 without traversal and 1.0 with it.
pub fn traversal_suite(seed: u64, cases: usize) -> Suite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut g, root) = base(&mut rng, 40);
    let mut table = HashMap::new();
    let mut out = Vec::new();
    for i in 0..cases {
        let q = random_unit(&mut rng, SUITE_DIM);
        let lib = format!("lib_{i:02}.py");
        let app = format!("app_{i:02}.py");
        let lib_file = add(&mut g, root, Node::file(&lib, "Python", 10), random_unit(&mut rng, SUITE_DIM));
        let app_file = add(&mut g, root, Node::file(&app, "Python", 10), negate(&q));
        let callee = add(&mut g, lib_file, Node::entity(NodeKind::Function, &lib, "callee", LineSpan::new(1, 3)), q.clone());
        let caller = add(&mut g, app_file, Node::entity(NodeKind::Function, &app, "caller", LineSpan::new(1, 3)), negate(&q));
        g.add_edge(caller, callee, EdgeKind::Calls).unwrap();
        let text = format!("wrong result from callee number {i}");
        table.insert(text.clone(), q);
        out.push(case(i as u64 + 1, text, [&lib, &app]));
    }
    Suite {
        graph: g,
        cases: out,
        embedder: TableEmbedder { dim: SUITE_DIM, table },
    }
}
