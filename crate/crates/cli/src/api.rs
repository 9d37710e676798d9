//! HTTP service.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{Path, Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use repograph_core::clustering::{ClusterMethod, ClusterOptions};
use repograph_core::graph::query::NodeSummary;
use repograph_core::graph::{Direction, ReadRequest, ReadResult};
use repograph_core::retrieval::{PreprocessMode, SelectivePolicy, TraversalMode};
use repograph_core::{EdgeKind, Error, KnowledgeGraph, NodeId, NodeKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::audit::{graph_id_of, request_digest, AuditLog, AuditRecord};
use crate::config::ServiceConfig;
use crate::jobs::JobRegistry;
use crate::ops;
use crate::providers::{text_source, ProviderSet};
use crate::store::{GraphEntry, GraphStore};

const MAX_BODY: usize = 16 * 1024 * 1024;
const MAX_SUBGRAPH_DEPTH: usize = 4;

pub struct App {
    pub config: ServiceConfig,
    pub providers: ProviderSet,
    pub store: GraphStore,
    pub jobs: JobRegistry,
    pub audit: AuditLog,
}

impl App {
    pub fn new(config: ServiceConfig, store: GraphStore, audit: AuditLog) -> Self {
        Self {
            providers: ProviderSet::from_config(&config),
            config,
            store,
            jobs: JobRegistry::default(),
            audit,
        }
    }
}

type Shared = Arc<App>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownNode(_) => StatusCode::NOT_FOUND,
            Error::RevisionMismatch { .. } => StatusCode::CONFLICT,
            Error::Provider(_) => StatusCode::SERVICE_UNAVAILABLE,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message, "status": self.status.as_u16() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let body: &[u8] = if body.is_empty() { b"{}" } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

fn entry(app: &App, id: &str) -> ApiResult<Arc<GraphEntry>> {
    app.store.get(id).ok_or_else(|| ApiError::not_found(format!("unknown graph `{id}`")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")))?
}

pub fn router(app: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/graphs", post(create_graph))
        .route("/jobs/{id}", get(job_status))
        .route("/graphs/{id}/update", post(update_graph))
        .route("/graphs/{id}/search", post(search))
        .route("/graphs/{id}/stats", get(stats))
        .route("/graphs/{id}/nodes", get(nodes))
        .route("/graphs/{id}/subgraph", get(subgraph))
        .route("/graphs/{id}/clusters", get(clusters))
        .layer(middleware::from_fn_with_state(app.clone(), audit))
        .with_state(app)
}

async fn audit(State(app): State<Shared>, req: Request, next: Next) -> Response {
    let path = req.uri().path().to_string();
    if path == "/healthz" {
        return next.run(req).await;
    }
    let started = Instant::now();
    let method = req.method().to_string();
    let query = req.uri().query().unwrap_or("").to_string();
    let (parts, body) = req.into_parts();
    let (bytes, response) = match to_bytes(body, MAX_BODY).await {
        Ok(b) => {
            let resp = next.run(Request::from_parts(parts, Body::from(b.clone()))).await;
            (b, resp)
        }
        Err(e) => (Bytes::new(), ApiError::bad_request(format!("unreadable body: {e}")).into_response()),
    };
    app.audit.append(AuditRecord {
        timestamp: Utc::now(),
        endpoint: format!("{method} {path}"),
        request_digest: request_digest(&method, &path, &query, &bytes),
        graph_id: graph_id_of(&path),
        duration_ms: started.elapsed().as_secs_f64() * 1e3,
        outcome: response.status().as_u16(),
    });
    response
}

async fn healthz(State(app): State<Shared>) -> Json<Value> {
    Json(json!({ "status": "ok", "graphs_loaded": app.store.len() }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildBody {
    repo: Option<PathBuf>,
    snapshot: Option<PathBuf>,
    #[serde(default = "head")]
    rev: String,
    #[serde(default)]
    skip_enrich: bool,
}

fn head() -> String {
    "HEAD".into()
}

async fn create_graph(State(app): State<Shared>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let body: BuildBody = parse(&body)?;
    let source = match (&body.repo, &body.snapshot) {
        (Some(p), None) | (None, Some(p)) => p.clone(),
        _ => return Err(ApiError::bad_request("give exactly one of `repo` or `snapshot`")),
    };
    if !source.exists() {
        return Err(ApiError::bad_request(format!("{} does not exist", source.display())));
    }
    let job = app.jobs.create(if body.repo.is_some() { "build" } else { "load" });
    let job_id = job.id.clone();
    let worker = app.clone();
    tokio::task::spawn_blocking(move || {
        worker.jobs.running(&job_id);
        let outcome = (|| -> repograph_core::Result<(String, Value)> {
            let (graph, summary) = match body.repo {
                Some(repo) => {
                    let (g, out) = ops::build(&repo, &body.rev, body.skip_enrich, &worker.providers, &worker.config)?;
                    (g, serde_json::to_value(out)?)
                }
                None => {
                    let g = KnowledgeGraph::load_snapshot(&source)?;
                    let v = json!({ "graph_id": g.meta.graph_id, "revision": g.meta.revision });
                    (g, v)
                }
            };
            Ok((worker.store.insert(graph)?, summary))
        })();
        worker.jobs.finish(&job_id, outcome.map_err(|e| e.to_string()));
    });
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "job_id": job.id, "status_url": format!("/jobs/{}", job.id) })),
    ))
}

async fn job_status(State(app): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let job = app.jobs.get(&id).ok_or_else(|| ApiError::not_found(format!("unknown job `{id}`")))?;
    Ok(Json(serde_json::to_value(job).expect("job serializes")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UpdateBody {
    old_revision: String,
    new_revision: String,
    repo: Option<PathBuf>,
    #[serde(default)]
    skip_enrich: bool,
}

async fn update_graph(State(app): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<ops::UpdateOutcome>> {
    let body: UpdateBody = parse(&body)?;
    let entry = entry(&app, &id)?;
    let _writer = entry.writer.lock().await;
    let current = entry.snapshot();
    let repo = body.repo.clone().unwrap_or_else(|| PathBuf::from(&current.meta.repo_url));
    let worker = app.clone();
    let target = entry.clone();
    blocking(move || {
        ops::check_old_revision(&current, &repo, &body.old_revision)?;
        let mut next = (*current).clone();
        let outcome = ops::update(&mut next, &repo, &body.old_revision, &body.new_revision, body.skip_enrich, &worker.providers, &worker.config)?;
        worker.store.replace(&target, next)?;
        Ok(outcome)
    })
    .await
    .map(Json)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchBody {
    query: String,
    k: Option<usize>,
    mode: Option<String>,
    budget_fraction: Option<f64>,
    traversal: Option<TraversalMode>,
    enable_discovery: Option<bool>,
    selective_policy: Option<SelectivePolicy>,
    semantic_kinds: Option<BTreeSet<NodeKind>>,
}

async fn search(State(app): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<ops::SearchOutput>> {
    let body: SearchBody = parse(&body)?;
    let mut req = app.config.request_template();
    req.query_text = body.query;
    if let Some(k) = body.k {
        req.k = k;
    }
    if let Some(m) = body.mode {
        req.mode = m.parse::<PreprocessMode>()?;
    }
    if body.budget_fraction.is_some() {
        req.budget_fraction = body.budget_fraction;
    }
    if let Some(t) = body.traversal {
        req.traversal = t;
    }
    if let Some(d) = body.enable_discovery {
        req.enable_discovery = d;
    }
    if let Some(p) = body.selective_policy {
        req.selective_policy = p;
    }
    if let Some(kinds) = body.semantic_kinds {
        req.semantic_kinds = kinds;
    }
    req.validate()?;
    let graph = entry(&app, &id)?.snapshot();
    blocking(move || Ok(ops::search(&graph, &req, &app.providers)?)).await.map(Json)
}

async fn stats(State(app): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let g = entry(&app, &id)?.snapshot();
    Ok(Json(json!({
        "graph_id": g.meta.graph_id,
        "repo_url": g.meta.repo_url,
        "revision": g.meta.revision,
        "provider_fingerprint": g.meta.provider_fingerprint,
        "embedding_dim": g.embedding_dim(),
        "stats": g.stats(),
    })))
}

#[derive(Debug, Deserialize)]
struct NodesQuery {
    path: Option<String>,
    id: Option<u64>,
    kind: Option<String>,
}

#[derive(Serialize)]
struct NodeList {
    nodes: Vec<NodeSummary>,
    description_source: &'static str,
}

async fn nodes(State(app): State<Shared>, Path(id): Path<String>, Query(q): Query<NodesQuery>) -> ApiResult<Response> {
    let g = entry(&app, &id)?.snapshot();
    let node = match (&q.path, q.id, &q.kind) {
        (Some(p), None, None) => g.node_by_path(p).ok_or_else(|| ApiError::not_found(format!("no node at `{p}`")))?,
        (None, Some(n), None) => g.node(NodeId(n)).ok_or(Error::UnknownNode(NodeId(n)))?,
        (None, None, Some(k)) => {
            let kind: NodeKind = k.parse()?;
            let list = NodeList {
                nodes: g.nodes_of_kind(kind).map(NodeSummary::from).collect(),
                description_source: text_source(&g.meta.provider_fingerprint),
            };
            return Ok(Json(list).into_response());
        }
        _ => return Err(ApiError::bad_request("give exactly one of `path`, `id` or `kind`")),
    };
    Ok(Json(ops::node_detail(&g, node)).into_response())
}

#[derive(Debug, Deserialize)]
struct SubgraphQuery {
    files: Option<String>,
    nodes: Option<String>,
    depth: Option<usize>,
}

fn split_list(s: &Option<String>) -> impl Iterator<Item = &str> {
    s.as_deref().unwrap_or("").split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// Seeds plus their neighbors within `depth` hops over every relation.
pub fn subgraph_nodes(g: &KnowledgeGraph, seeds: &BTreeSet<NodeId>, depth: usize) -> repograph_core::Result<BTreeSet<NodeId>> {
    let mut out = seeds.clone();
    if depth > 0 && !seeds.is_empty() {
        let edges: BTreeSet<EdgeKind> = EdgeKind::ALL.into_iter().collect();
        let kinds: BTreeSet<NodeKind> = NodeKind::ALL.into_iter().collect();
        out.extend(g.neighbors(seeds, &edges, Direction::Both, depth, &kinds)?);
    }
    Ok(out)
}

async fn subgraph(State(app): State<Shared>, Path(id): Path<String>, Query(q): Query<SubgraphQuery>) -> ApiResult<Json<Value>> {
    let g = entry(&app, &id)?.snapshot();
    let depth = q.depth.unwrap_or(1);
    if depth > MAX_SUBGRAPH_DEPTH {
        return Err(ApiError::bad_request(format!("depth must be <= {MAX_SUBGRAPH_DEPTH}")));
    }
    let mut seeds = BTreeSet::new();
    for f in split_list(&q.files) {
        let n = g.node_by_path(f).ok_or_else(|| ApiError::not_found(format!("no node at `{f}`")))?;
        seeds.insert(n.id);
    }
    for n in split_list(&q.nodes) {
        let n: u64 = n.parse().map_err(|_| ApiError::bad_request(format!("bad node id `{n}`")))?;
        seeds.insert(NodeId(n));
    }
    if seeds.is_empty() {
        return Err(ApiError::bad_request("give `files` or `nodes`"));
    }
    let ids = subgraph_nodes(&g, &seeds, depth)?;
    let ReadResult::Subgraph { nodes, edges } = g.read_query(&ReadRequest::SubgraphExtract {
        nodes: ids.into_iter().collect(),
    })?
    else {
        unreachable!("subgraph request answers with a subgraph")
    };
    Ok(Json(json!({
        "nodes": nodes,
        "edges": edges,
        "description_source": text_source(&g.meta.provider_fingerprint),
    })))
}

#[derive(Debug, Deserialize)]
struct ClusterQuery {
    method: Option<String>,
    seed: Option<u64>,
    resolution: Option<f64>,
    min_size: Option<usize>,
}

async fn clusters(State(app): State<Shared>, Path(id): Path<String>, Query(q): Query<ClusterQuery>) -> ApiResult<Json<ops::ClusterOutput>> {
    let method = match &q.method {
        Some(m) => m.parse::<ClusterMethod>()?,
        None => app.config.cluster_method,
    };
    let mut opts = ClusterOptions::new(method);
    opts.seed = q.seed.unwrap_or(app.config.cluster_seed);
    if let Some(r) = q.resolution {
        opts.resolution = r;
    }
    if let Some(m) = q.min_size {
        opts.min_size = m;
    }
    let g = entry(&app, &id)?.snapshot();
    blocking(move || Ok(ops::clusters(&g, &opts, &app.providers)?)).await.map(Json)
}

/// Serves `app` on `addr` until interrupted.
pub async fn serve(app: Shared, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
