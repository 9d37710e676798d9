//! Build, update, search and clustering flows shared by the CLI and the service.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use repograph_core::clustering::{cluster_files, ClusterOptions, ClusterReport};
use repograph_core::enrich::{enrich_graph, EnrichCache, EnrichOptions, EnrichReport, EnrichScope};
use repograph_core::graph::query::NodeSummary;
use repograph_core::ingest::checkout::{open_checkout, resolve_revision, GitCheckout};
use repograph_core::ingest::{build_graph, Checkout, diff_revisions, update_graph, AdapterRegistry, BuildOptions, ChangeSet, Diagnostics};
use repograph_core::retrieval::{search_relevant, FileResult, Provenance, RetrievalRequest, SearchDiagnostics};
use repograph_core::{EdgeKind, Error, KnowledgeGraph, LineSpan, Node, NodeId, NodeKind, Result};
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::providers::{text_source, ProviderSet};

const SNIPPET_LINES: usize = 12;
const SNIPPET_CHARS: usize = 800;

fn load_cache(cfg: &ServiceConfig) -> Result<EnrichCache> {
    match &cfg.enrich_cache {
        Some(p) if p.exists() => EnrichCache::load(p),
        _ => Ok(EnrichCache::new()),
    }
}

fn save_cache(cfg: &ServiceConfig, cache: &EnrichCache) -> Result<()> {
    if let Some(p) = &cfg.enrich_cache {
        cache.save(p)?;
    }
    Ok(())
}

fn enrich(graph: &mut KnowledgeGraph, providers: &ProviderSet, cfg: &ServiceConfig, scope: EnrichScope) -> Result<EnrichReport> {
    let cache = load_cache(cfg)?;
    let options = EnrichOptions {
        scope,
        ..EnrichOptions::default()
    };
    let embedder = providers.embedder(graph.embedding_dim().or(Some(cfg.embedding_dim)));
    let report = enrich_graph(graph, providers.summarizer.as_ref(), embedder.as_ref(), &cache, &options)?;
    save_cache(cfg, &cache)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuildOutcome {
    pub graph_id: String,
    pub revision: String,
    pub seconds: f64,
    pub diagnostics: Diagnostics,
    pub enrichment: Option<EnrichReport>,
}

/// Builds (and unless `skip_enrich`, enriches) the graph of `repo` at `rev`.
pub fn build(repo: &Path, rev: &str, skip_enrich: bool, providers: &ProviderSet, cfg: &ServiceConfig) -> Result<(KnowledgeGraph, BuildOutcome)> {
    let started = Instant::now();
    let repo = repo.canonicalize().map_err(|e| Error::InvalidArgument(format!("repository {}: {e}", repo.display())))?;
    let checkout = open_checkout(&repo, rev)?;
    let url = repo.to_string_lossy().into_owned();
    let (mut graph, diagnostics) = build_graph(checkout.as_ref(), &url, &AdapterRegistry::default(), &BuildOptions::default())?;
    let enrichment = if skip_enrich {
        None
    } else {
        Some(enrich(&mut graph, providers, cfg, EnrichScope::All)?)
    };
    let outcome = BuildOutcome {
        graph_id: graph.meta.graph_id.clone(),
        revision: graph.meta.revision.clone(),
        seconds: started.elapsed().as_secs_f64(),
        diagnostics,
        enrichment,
    };
    Ok((graph, outcome))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UpdateOutcome {
    pub old_revision: String,
    pub new_revision: String,
    pub added: usize,
    pub modified: usize,
    pub deleted: usize,
    pub seconds: f64,
    pub diagnostics: Diagnostics,
    pub enrichment: Option<EnrichReport>,
}

/// Checks that `old` names the graph's revision, resolving it in `repo` when
/// it is not literally equal.
pub fn check_old_revision(graph: &KnowledgeGraph, repo: &Path, old: &str) -> Result<()> {
    let current = &graph.meta.revision;
    if old == current || resolve_revision(repo, old).is_ok_and(|r| &r == current) {
        return Ok(());
    }
    Err(Error::RevisionMismatch {
        graph: current.clone(),
        change_set: old.to_string(),
    })
}

/// Moves `graph` from `old` to `new` in the git repository `repo` and
/// re-enriches stale nodes.
pub fn update(
    graph: &mut KnowledgeGraph,
    repo: &Path,
    old: &str,
    new: &str,
    skip_enrich: bool,
    providers: &ProviderSet,
    cfg: &ServiceConfig,
) -> Result<UpdateOutcome> {
    let started = Instant::now();
    check_old_revision(graph, repo, old)?;
    let mut change: ChangeSet = diff_revisions(repo, old, new)?;
    // The graph may record the revision exactly as given (e.g. a short hash).
    change.old_revision = graph.meta.revision.clone();
    let checkout = GitCheckout::open(repo, new)?;
    change.new_revision = checkout.revision().to_string();
    let diagnostics = update_graph(graph, &checkout, &change, &AdapterRegistry::default(), &BuildOptions::default())?;
    let enrichment = if skip_enrich {
        None
    } else {
        Some(enrich(graph, providers, cfg, EnrichScope::StaleOnly)?)
    };
    Ok(UpdateOutcome {
        old_revision: change.old_revision.clone(),
        new_revision: graph.meta.revision.clone(),
        added: change.added.len(),
        modified: change.modified.len(),
        deleted: change.deleted.len(),
        seconds: started.elapsed().as_secs_f64(),
        diagnostics,
        enrichment,
    })
}

/// Generated text with its origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledText {
    pub text: String,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line_span: Option<LineSpan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<LabeledText>,
}

pub fn snippet(node: &Node) -> Option<String> {
    let raw = node.raw_content.as_deref()?;
    let mut out: String = raw.lines().take(SNIPPET_LINES).collect::<Vec<_>>().join("\n");
    if let Some((i, _)) = out.char_indices().nth(SNIPPET_CHARS) {
        out.truncate(i);
    }
    (!out.trim().is_empty()).then_some(out)
}

pub fn describe(graph: &KnowledgeGraph, node: &Node) -> Option<LabeledText> {
    node.description.as_ref().map(|d| LabeledText {
        text: d.clone(),
        source: text_source(&graph.meta.provider_fingerprint).to_string(),
    })
}

pub fn evidence(graph: &KnowledgeGraph, node: &Node) -> Evidence {
    Evidence {
        id: node.id,
        kind: node.kind,
        name: node.name.clone(),
        path: node.path.clone(),
        line_span: node.line_span,
        snippet: snippet(node),
        description: describe(graph, node),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub rank: usize,
    pub path: String,
    pub score: f64,
    pub provenance: Vec<Provenance>,
    pub evidence: Vec<Evidence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutput {
    pub graph_id: String,
    pub revision: String,
    pub query: String,
    pub k: usize,
    pub results: Vec<SearchHit>,
    pub diagnostics: SearchDiagnostics,
}

fn hit(graph: &KnowledgeGraph, r: FileResult) -> SearchHit {
    SearchHit {
        rank: r.rank,
        path: r.path,
        score: r.score,
        provenance: r.provenance.into_iter().collect(),
        evidence: r.evidence_nodes.iter().filter_map(|id| graph.node(*id)).map(|n| evidence(graph, n)).collect(),
    }
}

pub fn search(graph: &KnowledgeGraph, request: &RetrievalRequest, providers: &ProviderSet) -> Result<SearchOutput> {
    let embedder = providers.embedder(graph.embedding_dim());
    let resp = search_relevant(graph, request, providers.retrieval(embedder.as_ref()))?;
    Ok(SearchOutput {
        graph_id: graph.meta.graph_id.clone(),
        revision: graph.meta.revision.clone(),
        query: request.query_text.clone(),
        k: request.k,
        results: resp.results.into_iter().map(|r| hit(graph, r)).collect(),
        diagnostics: resp.diagnostics,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: NodeId,
    pub kind: NodeKind,
    pub path: String,
    pub name: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborGroup {
    pub outgoing: Vec<Neighbor>,
    pub incoming: Vec<Neighbor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDetail {
    pub node: NodeSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<LabeledText>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    pub neighbors: BTreeMap<EdgeKind, NeighborGroup>,
}

pub fn node_detail(graph: &KnowledgeGraph, node: &Node) -> NodeDetail {
    let as_neighbor = |id: NodeId| {
        graph.node(id).map(|n| Neighbor {
            id,
            kind: n.kind,
            path: n.path.clone(),
            name: n.name.clone(),
        })
    };
    let mut neighbors: BTreeMap<EdgeKind, NeighborGroup> = BTreeMap::new();
    for (kind, other) in graph.outgoing(node.id) {
        neighbors.entry(kind).or_default().outgoing.extend(as_neighbor(other));
    }
    for (kind, other) in graph.incoming(node.id) {
        neighbors.entry(kind).or_default().incoming.extend(as_neighbor(other));
    }
    let mut summary = NodeSummary::from(node);
    // Generated text is only returned in its labelled form.
    summary.description = None;
    NodeDetail {
        node: summary,
        description: describe(graph, node),
        snippet: snippet(node),
        neighbors,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub graph_id: String,
    pub revision: String,
    /// Origin of the cluster labels.
    pub label_source: String,
    pub report: ClusterReport,
    pub warnings: Vec<String>,
}

pub fn clusters(graph: &KnowledgeGraph, options: &ClusterOptions, providers: &ProviderSet) -> Result<ClusterOutput> {
    let assignment = cluster_files(graph, options, Some(providers.summarizer.as_ref()))?;
    let fp = providers.fingerprint(graph.embedding_dim());
    Ok(ClusterOutput {
        graph_id: graph.meta.graph_id.clone(),
        revision: graph.meta.revision.clone(),
        label_source: text_source(&fp).to_string(),
        report: assignment.report(graph),
        warnings: assignment.warnings.clone(),
    })
}
