//! Seeded random graphs with repository-like structure, for tests and
//! benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::graph::{EdgeKind, EnrichmentStatus, KnowledgeGraph, LineSpan, Node, NodeId, NodeKind};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub folders: usize,
    pub files: usize,
    pub classes: usize,
    pub functions: usize,
    pub member_functions: usize,
    pub calls: usize,
    pub inherits: usize,
    pub refers: usize,
    pub tests: usize,
    /// Description embeddings of this dim on every non-Root node.
    pub dim: Option<usize>,
    pub code_embeddings: bool,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Per-kind counts of the Poetry statistics table. Calls are not listed
    /// there and are left at zero.
    pub fn poetry_scale(seed: u64) -> Self {
        Self {
            folders: 280,
            files: 763,
            classes: 228,
            functions: 1016,
            member_functions: 967,
            calls: 0,
            inherits: 104,
            refers: 995,
            tests: 712,
            dim: None,
            code_embeddings: false,
            seed,
        }
    }

    /// 16,700 nodes (Root included) and 165,000 edges.
    pub fn latency_scale(seed: u64, dim: usize) -> Self {
        Self {
            folders: 699,
            files: 3000,
            classes: 3000,
            functions: 2000,
            member_functions: 8000,
            calls: 130_000,
            inherits: 2_000,
            refers: 10_000,
            tests: 6_301,
            dim: Some(dim),
            code_embeddings: false,
            seed,
        }
    }

    /// Up to `max_nodes` nodes (Root included) with a random kind mix and
    /// density.
    pub fn random_small(seed: u64, max_nodes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = rng.random_range(1..max_nodes.max(2));
        let mut take = |max: usize| rng.random_range(0..=max);
        let files = take(budget.min(12)).max(1);
        let left = budget - files;
        let folders = take(left.min(6));
        let left = left - folders;
        let classes = take(left.min(8));
        let left = left - classes;
        let functions = take(left);
        let member_functions = if classes > 0 { left - functions } else { 0 };
        let callables = functions + member_functions;
        Self {
            folders,
            files,
            classes,
            functions,
            member_functions,
            calls: take(callables * 2),
            inherits: take(classes),
            refers: take(files * 2),
            tests: take(files + callables),
            dim: None,
            code_embeddings: false,
            seed,
        }
    }

    pub fn total_nodes(&self) -> usize {
        1 + self.folders + self.files + self.classes + self.functions + self.member_functions
    }
}

pub fn random_unit(rng: &mut impl Rng, dim: usize) -> EmbeddingVector {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Ok(e) = EmbeddingVector::normalized_f64(&v) {
            return e;
        }
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, items: &[T]) -> Option<T> {
    (!items.is_empty()).then(|| items[rng.random_range(0..items.len())])
}

/// Adds up to `count` distinct random edges of `kind`; stops early when the
/// candidate space is exhausted.
fn sprinkle(g: &mut KnowledgeGraph, rng: &mut impl Rng, kind: EdgeKind, src: &[NodeId], dst: &[NodeId], count: usize) -> Result<()> {
    let mut added = 0;
    let mut attempts = 0;
    while added < count && attempts < count * 20 + 100 {
        attempts += 1;
        let (Some(s), Some(d)) = (pick(rng, src), pick(rng, dst)) else {
            return Ok(());
        };
        if s == d && kind == EdgeKind::Inherits {
            continue;
        }
        if g.add_edge(s, d, kind)? {
            added += 1;
        }
    }
    Ok(())
}

pub fn generate(spec: &SyntheticSpec) -> Result<KnowledgeGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut g = KnowledgeGraph::new(format!("synthetic://{}", spec.seed), format!("rev-{}", spec.seed));
    let decorate = |rng: &mut ChaCha8Rng, mut node: Node, idx: usize| -> Node {
        node.description = Some(format!("synthetic {} {idx}", node.kind));
        if let Some(dim) = spec.dim {
            node.description_embedding = Some(random_unit(rng, dim));
            if spec.code_embeddings && node.kind != NodeKind::Folder {
                node.code_embedding = Some(random_unit(rng, dim));
            }
        }
        node.enrichment = EnrichmentStatus::Done;
        node
    };
    let mut root = Node::root(format!("synthetic-{}", spec.seed));
    root.enrichment = EnrichmentStatus::Done;
    let root = g.upsert_node(root)?;

    let mut folders: Vec<(NodeId, String)> = Vec::with_capacity(spec.folders);
    for i in 0..spec.folders {
        let parent = rng.random_range(0..=folders.len());
        let (pid, path) = if parent == folders.len() {
            (root, format!("d{i}"))
        } else {
            let (pid, p) = &folders[parent];
            (*pid, format!("{p}/d{i}"))
        };
        let id = g.upsert_node(decorate(&mut rng, Node::folder(path.clone()), i))?;
        g.add_edge(pid, id, EdgeKind::Contains)?;
        folders.push((id, path));
    }
    let mut files: Vec<(NodeId, String)> = Vec::with_capacity(spec.files);
    for i in 0..spec.files {
        let slot = rng.random_range(0..=folders.len());
        let (pid, path) = if slot == folders.len() {
            (root, format!("f{i}.py"))
        } else {
            let (pid, p) = &folders[slot];
            (*pid, format!("{p}/f{i}.py"))
        };
        let mut node = Node::file(path.clone(), "Python", 100 + i as u64);
        node.raw_content = Some(format!("# file {i}\n"));
        let id = g.upsert_node(decorate(&mut rng, node, i))?;
        g.add_edge(pid, id, EdgeKind::Contains)?;
        files.push((id, path));
    }
    let entity = |g: &mut KnowledgeGraph, rng: &mut ChaCha8Rng, kind: NodeKind, file: &(NodeId, String), qn: String, i: usize| -> Result<NodeId> {
        let mut node = Node::entity(kind, file.1.clone(), qn, LineSpan::new(1, 2));
        if kind.is_callable() {
            node.signature = Some(format!("def {}()", node.name));
        }
        let id = g.upsert_node(decorate(rng, node, i))?;
        g.add_edge(file.0, id, EdgeKind::Implements)?;
        Ok(id)
    };
    let mut classes: Vec<(NodeId, usize, String)> = Vec::new();
    let mut callables: Vec<NodeId> = Vec::new();
    if !files.is_empty() {
        for i in 0..spec.classes {
            let f = rng.random_range(0..files.len());
            let id = entity(&mut g, &mut rng, NodeKind::Class, &files[f], format!("C{i}"), i)?;
            classes.push((id, f, format!("C{i}")));
        }
        for i in 0..spec.functions {
            let f = rng.random_range(0..files.len());
            callables.push(entity(&mut g, &mut rng, NodeKind::Function, &files[f], format!("fn{i}"), i)?);
        }
        if !classes.is_empty() {
            for i in 0..spec.member_functions {
                let (_, f, cname) = classes[rng.random_range(0..classes.len())].clone();
                let qn = format!("{cname}.m{i}");
                callables.push(entity(&mut g, &mut rng, NodeKind::MemberFunction, &files[f], qn, i)?);
            }
        }
    }
    let file_ids: Vec<NodeId> = files.iter().map(|f| f.0).collect();
    let class_ids: Vec<NodeId> = classes.iter().map(|c| c.0).collect();
    let testables: Vec<NodeId> = file_ids.iter().chain(callables.iter()).copied().collect();
    sprinkle(&mut g, &mut rng, EdgeKind::Calls, &callables, &callables, spec.calls)?;
    sprinkle(&mut g, &mut rng, EdgeKind::Inherits, &class_ids, &class_ids, spec.inherits)?;
    sprinkle(&mut g, &mut rng, EdgeKind::Refers, &file_ids, &file_ids, spec.refers)?;
    sprinkle(&mut g, &mut rng, EdgeKind::Tests, &testables, &testables, spec.tests)?;
    Ok(g)
}
