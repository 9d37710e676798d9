//! Node summaries and embeddings from pluggable providers.

pub mod cache;
pub mod http;
pub mod prompt;
pub mod stub;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CacheValue, EnrichCache};
pub use http::{HttpEmbedder, HttpProviderConfig, HttpSummarizer, ProviderClient};
pub use stub::{is_stub_fingerprint, stub_embed, stub_summarize, StubEmbedder, StubSummarizer};

use crate::embedding::EmbeddingVector;
use crate::graph::{EnrichmentStatus, KnowledgeGraph, NodeId, NodeKind};
use crate::{Error, Result};

const EMBED_VERSION: &str = "embed_v1";

/// Input to a summarizer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRequest {
    pub kind: NodeKind,
    pub name: String,
    pub path: String,
    pub docstring: Option<String>,
    pub content: Option<String>,
    /// Rendered instructions and repository context.
    pub context: String,
}

pub trait SummarizerProvider: Send + Sync {
    fn identity(&self) -> String;
    fn summarize(&self, req: &SummaryRequest) -> Result<String>;
}

pub trait EmbedderProvider: Send + Sync {
    fn identity(&self) -> String;
    fn dim(&self) -> usize;
    /// One vector per input text, in order.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichScope {
    All,
    /// Nodes not yet successfully enriched.
    #[default]
    StaleOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichOptions {
    pub scope: EnrichScope,
    pub max_in_flight: usize,
    pub batch_size: usize,
    pub max_content_chars: usize,
    pub code_embedding_kinds: BTreeSet<NodeKind>,
}

impl Default for EnrichOptions {
    fn default() -> Self {
        Self {
            scope: EnrichScope::StaleOnly,
            max_in_flight: 8,
            batch_size: 64,
            max_content_chars: 8000,
            code_embedding_kinds: [NodeKind::File, NodeKind::Class, NodeKind::Function, NodeKind::MemberFunction]
                .into_iter()
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichFailure {
    pub node: NodeId,
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichReport {
    pub enriched: usize,
    pub failures: Vec<EnrichFailure>,
    pub summarizer_calls: usize,
    /// Texts sent to the embedder.
    pub embedded_texts: usize,
    pub cache_hits: usize,
}

const ENRICHED_KINDS: [NodeKind; 5] = [
    NodeKind::Folder,
    NodeKind::File,
    NodeKind::Class,
    NodeKind::Function,
    NodeKind::MemberFunction,
];

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn pool(n: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| Error::Provider(format!("cannot start worker pool: {e}")))
}

pub fn fingerprint(summarizer: &dyn SummarizerProvider, embedder: &dyn EmbedderProvider) -> String {
    format!("{}+{}", summarizer.identity(), embedder.identity())
}

/// Fills description, description embedding and (for code kinds) code
/// embedding of in-scope nodes. Provider failures mark single nodes failed;
/// a dimension mismatch with the graph is a hard error.
pub fn enrich_graph(
    graph: &mut KnowledgeGraph,
    summarizer: &dyn SummarizerProvider,
    embedder: &dyn EmbedderProvider,
    cache: &EnrichCache,
    options: &EnrichOptions,
) -> Result<EnrichReport> {
    let dim = embedder.dim();
    match graph.embedding_dim() {
        Some(d) if d != dim => {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: dim,
            })
        }
        Some(_) => {}
        None => graph.set_embedding_dim(dim)?,
    }
    let repo = graph.root().map(|r| r.name.clone()).unwrap_or_default();
    let summarizer_id = summarizer.identity();
    let embedder_id = embedder.identity();
    let workers = pool(options.max_in_flight)?;

    let targets: Vec<NodeId> = graph
        .nodes()
        .filter(|n| ENRICHED_KINDS.contains(&n.kind))
        .filter(|n| options.scope == EnrichScope::All || n.enrichment != EnrichmentStatus::Done)
        .map(|n| n.id)
        .collect();

    let mut report = EnrichReport::default();
    let mut descriptions: BTreeMap<NodeId, std::result::Result<String, String>> = BTreeMap::new();
    let mut pending: Vec<(NodeId, String, SummaryRequest)> = Vec::new();
    for &id in &targets {
        let n = graph.node(id).expect("target exists");
        let req = SummaryRequest {
            kind: n.kind,
            name: n.name.clone(),
            path: n.path.clone(),
            docstring: n.docstring.clone(),
            content: n.raw_content.as_deref().map(|c| truncate(c, options.max_content_chars).to_string()),
            context: prompt::summarize_prompt(n.kind.as_str(), &n.name, &n.path, &repo),
        };
        let key = cache_key(&serde_json::to_string(&req)?, &summarizer_id, prompt::SUMMARIZE_VERSION);
        match cache.get(&key) {
            Some(CacheValue::Description(d)) => {
                report.cache_hits += 1;
                descriptions.insert(id, Ok(d));
            }
            _ => pending.push((id, key, req)),
        }
    }
    report.summarizer_calls = pending.len();
    let fresh: Vec<(NodeId, std::result::Result<String, String>)> = workers.install(|| {
        pending
            .par_iter()
            .map(|(id, key, req)| {
                let out = summarizer.summarize(req).and_then(|d| {
                    if d.trim().is_empty() {
                        Err(Error::Provider("empty description".into()))
                    } else {
                        Ok(d)
                    }
                });
                if let Ok(d) = &out {
                    cache.insert(key.clone(), CacheValue::Description(d.clone()));
                }
                (*id, out.map_err(|e| e.to_string()))
            })
            .collect()
    });
    descriptions.extend(fresh);

    // Texts to embed per node: description, then code for code kinds.
    let mut wanted: BTreeMap<NodeId, (String, Option<String>)> = BTreeMap::new();
    for (&id, d) in &descriptions {
        let Ok(desc) = d else { continue };
        let n = graph.node(id).expect("target exists");
        let code = options.code_embedding_kinds.contains(&n.kind).then(|| {
            let body = n.raw_content.as_deref().unwrap_or("");
            format!("{}\n{}", n.path, truncate(body, options.max_content_chars))
        });
        wanted.insert(id, (desc.clone(), code));
    }
    let mut vectors: HashMap<String, std::result::Result<EmbeddingVector, String>> = HashMap::new();
    let mut to_embed: Vec<String> = Vec::new();
    let mut queued: BTreeSet<&str> = BTreeSet::new();
    for text in wanted.values().flat_map(|(d, c)| std::iter::once(d).chain(c.iter())) {
        if vectors.contains_key(text) || !queued.insert(text) {
            continue;
        }
        match cache.get(&cache_key(text, &embedder_id, EMBED_VERSION)) {
            Some(CacheValue::Embedding(v)) if v.len() == dim => {
                report.cache_hits += 1;
                vectors.insert(text.clone(), EmbeddingVector::from_unit(v).map_err(|e| e.to_string()));
            }
            _ => to_embed.push(text.clone()),
        }
    }
    report.embedded_texts = to_embed.len();
    let batches: Vec<Vec<(String, std::result::Result<EmbeddingVector, String>)>> = workers.install(|| {
        to_embed
            .par_chunks(options.batch_size.max(1))
            .map(|chunk| match embedder.embed(chunk) {
                Ok(vs) if vs.len() == chunk.len() => chunk
                    .iter()
                    .cloned()
                    .zip(vs.into_iter().map(|v| {
                        if v.dim() == dim {
                            Ok(v)
                        } else {
                            Err(format!("embedder returned dim {}, expected {dim}", v.dim()))
                        }
                    }))
                    .collect(),
                Ok(vs) => chunk
                    .iter()
                    .map(|t| (t.clone(), Err(format!("embedder returned {} vectors for {}", vs.len(), chunk.len()))))
                    .collect(),
                Err(e) => chunk.iter().map(|t| (t.clone(), Err(e.to_string()))).collect(),
            })
            .collect()
    });
    for (text, v) in batches.into_iter().flatten() {
        if let Ok(vec) = &v {
            cache.insert(
                cache_key(&text, &embedder_id, EMBED_VERSION),
                CacheValue::Embedding(vec.as_slice().to_vec()),
            );
        }
        vectors.insert(text, v);
    }

    for (id, desc) in descriptions {
        let outcome = desc.and_then(|d| {
            let (_, code) = &wanted[&id];
            let de = vectors[&d].clone()?;
            let ce = match code {
                Some(c) => Some(vectors[c].clone()?),
                None => None,
            };
            Ok((d, de, ce))
        });
        let node = graph.node_mut(id).expect("target exists");
        match outcome {
            Ok((d, de, ce)) => {
                node.description = Some(d);
                node.description_embedding = Some(de);
                node.code_embedding = ce;
                node.enrichment = EnrichmentStatus::Done;
                report.enriched += 1;
            }
            Err(message) => {
                node.description = None;
                node.description_embedding = None;
                node.code_embedding = None;
                node.enrichment = EnrichmentStatus::Failed;
                report.failures.push(EnrichFailure {
                    node: id,
                    path: node.path.clone(),
                    message,
                });
            }
        }
    }
    graph.meta.provider_fingerprint = fingerprint(summarizer, embedder);
    Ok(report)
}
