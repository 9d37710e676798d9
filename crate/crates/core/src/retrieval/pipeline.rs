use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::discovery::discover_mentioned_files;
use super::expand::{expand_scored, TraversalMode};
use super::preprocess::{preprocess_query, FileSuggester, PreprocessMode, QueryPreprocessor};
use super::semantic::{default_semantic_kinds, max_similarity, semantic_search, SelectivePolicy};
use crate::enrich::EmbedderProvider;
use crate::graph::{KnowledgeGraph, NodeId, NodeKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Semantic,
    Traversal,
    Discovery,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRequest {
    pub query_text: String,
    #[serde(default)]
    pub mode: PreprocessMode,
    pub k: usize,
    /// Semantic candidates as a fraction of the repository's files.
    #[serde(default)]
    pub budget_fraction: Option<f64>,
    #[serde(default)]
    pub traversal: TraversalMode,
    #[serde(default = "yes")]
    pub enable_discovery: bool,
    #[serde(default)]
    pub selective_policy: SelectivePolicy,
    #[serde(default = "default_semantic_kinds")]
    pub semantic_kinds: BTreeSet<NodeKind>,
}

fn yes() -> bool {
    true
}

impl RetrievalRequest {
    pub fn new(query_text: impl Into<String>, k: usize) -> Self {
        Self {
            query_text: query_text.into(),
            mode: PreprocessMode::None,
            k,
            budget_fraction: None,
            traversal: TraversalMode::Default,
            enable_discovery: true,
            selective_policy: SelectivePolicy::PerNodeMax,
            semantic_kinds: default_semantic_kinds(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if let Some(b) = self.budget_fraction {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::InvalidArgument(format!("budget_fraction {b} is outside (0, 1]")));
            }
        }
        if self.query_text.trim().is_empty() {
            return Err(Error::InvalidArgument("query must not be empty".into()));
        }
        Ok(())
    }

    /// Number of semantic candidate nodes for a repository of `files` files.
    pub fn candidate_limit(&self, files: usize) -> usize {
        match self.budget_fraction {
            Some(b) => ((b * files as f64).ceil() as usize).max(1),
            None => self.k.saturating_mul(4),
        }
    }
}

#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub embedder: &'a dyn EmbedderProvider,
    pub preprocessor: Option<&'a dyn QueryPreprocessor>,
    pub suggester: Option<&'a dyn FileSuggester>,
}

impl<'a> Providers<'a> {
    pub fn embedder_only(embedder: &'a dyn EmbedderProvider) -> Self {
        Self {
            embedder,
            preprocessor: None,
            suggester: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileResult {
    pub path: String,
    pub score: f64,
    pub rank: usize,
    pub provenance: BTreeSet<Provenance>,
    pub evidence_nodes: Vec<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub preprocess: f64,
    pub semantic: f64,
    pub traversal: f64,
    pub discovery: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    pub stage_warnings: Vec<String>,
    pub timings_ms: StageTimings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<FileResult>,
    pub diagnostics: SearchDiagnostics,
}

#[derive(Default)]
struct Candidate {
    score: Option<f64>,
    provenance: BTreeSet<Provenance>,
    evidence: BTreeSet<NodeId>,
}

impl Candidate {
    fn credit(&mut self, score: f64, stage: Provenance, node: NodeId) {
        self.score = Some(self.score.map_or(score, |s| s.max(score)));
        self.provenance.insert(stage);
        self.evidence.insert(node);
    }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Files most likely to change for the request's query, best first.
pub fn search_relevant(graph: &KnowledgeGraph, request: &RetrievalRequest, providers: Providers<'_>) -> Result<SearchResponse> {
    request.validate()?;
    let enriched = graph
        .nodes()
        .any(|n| request.semantic_kinds.contains(&n.kind) && n.search_embedding().is_some());
    if !enriched {
        return Err(Error::NotEnriched);
    }
    if let Some(dim) = graph.embedding_dim() {
        if dim != providers.embedder.dim() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: providers.embedder.dim(),
            });
        }
    }
    let mut diag = SearchDiagnostics::default();

    let t = Instant::now();
    let bundle = preprocess_query(&request.query_text, request.mode, providers.preprocessor, providers.embedder)?;
    diag.stage_warnings.extend(bundle.warnings.iter().cloned());
    diag.timings_ms.preprocess = elapsed_ms(t);

    let t = Instant::now();
    let files_total = graph.nodes_of_kind(NodeKind::File).count();
    let semantic = semantic_search(
        graph,
        &bundle,
        &request.semantic_kinds,
        request.candidate_limit(files_total),
        request.selective_policy,
    )?;
    diag.stage_warnings.extend(semantic.warnings);
    diag.timings_ms.semantic = elapsed_ms(t);

    let mut files: BTreeMap<NodeId, Candidate> = BTreeMap::new();
    let attribute = |files: &mut BTreeMap<NodeId, Candidate>, node: NodeId, score: f64, stage: Provenance| {
        if let Some(file) = graph.defining_file(node) {
            files.entry(file).or_default().credit(score, stage, node);
        }
    };
    for hit in &semantic.hits {
        attribute(&mut files, hit.node, hit.score, Provenance::Semantic);
    }

    let t = Instant::now();
    let seeds: Vec<(NodeId, f64)> = semantic.hits.iter().map(|h| (h.node, h.score)).collect();
    for (node, (score, _)) in expand_scored(graph, &seeds, &request.traversal)? {
        attribute(&mut files, node, score, Provenance::Traversal);
    }
    diag.timings_ms.traversal = elapsed_ms(t);

    let t = Instant::now();
    let mut discovered = BTreeSet::new();
    if request.enable_discovery {
        let found = discover_mentioned_files(&request.query_text, graph, providers.suggester);
        diag.stage_warnings.extend(found.warnings);
        for file in found.files {
            let c = files.entry(file).or_default();
            c.provenance.insert(Provenance::Discovery);
            c.evidence.insert(file);
            discovered.insert(file);
        }
    }
    diag.timings_ms.discovery = elapsed_ms(t);

    let mut rows: Vec<(bool, f64, String, FileResult)> = Vec::with_capacity(files.len());
    for (file, c) in files {
        let node = graph.node(file).ok_or(Error::UnknownNode(file))?;
        let score = match c.score {
            Some(s) => s,
            None => match node.search_embedding() {
                Some(e) => max_similarity(&bundle.embeddings, e)?,
                None => 0.0,
            },
        };
        rows.push((
            discovered.contains(&file),
            score,
            node.path.clone(),
            FileResult {
                path: node.path.clone(),
                score,
                rank: 0,
                provenance: c.provenance,
                evidence_nodes: c.evidence.into_iter().collect(),
            },
        ));
    }
    rows.sort_by(|a, b| match (a.0, b.0) {
        (true, true) => a.2.cmp(&b.2),
        (true, false) => std::cmp::Ordering::Less,
        (false, true) => std::cmp::Ordering::Greater,
        (false, false) => b.1.total_cmp(&a.1).then_with(|| a.2.cmp(&b.2)),
    });
    let results = rows
        .into_iter()
        .take(request.k)
        .enumerate()
        .map(|(i, (.., mut r))| {
            r.rank = i + 1;
            r
        })
        .collect();
    Ok(SearchResponse {
        results,
        diagnostics: diag,
    })
}
