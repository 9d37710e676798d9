mod common;

use std::collections::{BTreeSet, VecDeque};

use axum::http::StatusCode;
use repograph_cli::ops;
use repograph_cli::providers::{ProviderSet, LLM_SUGGESTED, STUB_GENERATED};
use repograph_core::graph::{ReadRequest, ReadResult};
use repograph_core::{KnowledgeGraph, NodeId};
use serde_json::{json, Value};

use common::{app_with, call, call_raw, fixture_graph, two_commit_repo, wait_job};

/// Undirected reachability within `depth` hops over the raw edge list.
fn bfs_oracle(g: &KnowledgeGraph, seeds: &BTreeSet<NodeId>, depth: usize) -> BTreeSet<NodeId> {
    let mut dist: std::collections::HashMap<NodeId, usize> = seeds.iter().map(|s| (*s, 0)).collect();
    let mut queue: VecDeque<NodeId> = seeds.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        if d == depth {
            continue;
        }
        for e in g.edges() {
            let other = if e.src == n {
                e.dst
            } else if e.dst == n {
                e.src
            } else {
                continue;
            };
            if !dist.contains_key(&other) {
                dist.insert(other, d + 1);
                queue.push_back(other);
            }
        }
    }
    dist.into_keys().collect()
}

#[tokio::test]
async fn healthz_reports_loaded_graphs() {
    let app = app_with(vec![fixture_graph()]);
    let (status, body) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"status": "ok", "graphs_loaded": 1}));
    assert!(app.audit.records().is_empty());
}

#[tokio::test]
async fn search_returns_ranked_files_with_provenance() {
    let g = fixture_graph();
    let id = g.meta.graph_id.clone();
    let app = app_with(vec![g]);
    let (status, body) = call(
        &app,
        "POST",
        &format!("/graphs/{id}/search"),
        Some(json!({"query": "poetry new . acts like poetry init", "mode": "None", "k": 5})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let results = body["results"].as_array().unwrap();
    assert_eq!(results.len(), 5);
    for (i, r) in results.iter().enumerate() {
        assert_eq!(r["rank"], i + 1);
        assert!(!r["provenance"].as_array().unwrap().is_empty());
        let ev = r["evidence"].as_array().unwrap();
        assert!(!ev.is_empty());
        for e in ev {
            assert!(e["id"].is_u64() && e["path"].is_string());
            if let Some(d) = e.get("description") {
                assert_eq!(d["source"], STUB_GENERATED);
            }
        }
    }
    assert!(body["diagnostics"]["timings_ms"]["semantic"].is_number());
    assert_eq!(body["revision"], "fixture");
}

#[tokio::test]
async fn provider_text_is_labelled_llm_suggested() {
    let mut g = fixture_graph();
    g.meta.provider_fingerprint = "http:https://llm.example+http:https://emb.example/d256".into();
    let id = g.meta.graph_id.clone();
    let app = app_with(vec![g]);
    let (status, body) = call(&app, "GET", &format!("/graphs/{id}/nodes?path=src/poetry/console/commands/new.py"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["description"]["source"], LLM_SUGGESTED);
    assert!(body["node"].get("description").is_none());
    let (_, sub) = call(&app, "GET", &format!("/graphs/{id}/subgraph?files=src/poetry/console/commands/new.py&depth=1"), None).await;
    assert_eq!(sub["description_source"], LLM_SUGGESTED);
}

#[tokio::test]
async fn read_only_endpoints_keep_content_hash() {
    let g = fixture_graph();
    let id = g.meta.graph_id.clone();
    let before = g.content_hash();
    let app = app_with(vec![g]);
    let requests = [
        ("POST", format!("/graphs/{id}/search"), Some(json!({"query": "installer lock order"}))),
        ("GET", format!("/graphs/{id}/stats"), None),
        ("GET", format!("/graphs/{id}/nodes?path=src/poetry/installation/installer.py"), None),
        ("GET", format!("/graphs/{id}/nodes?kind=Class"), None),
        ("GET", format!("/graphs/{id}/subgraph?files=src/poetry/installation/installer.py&depth=2"), None),
        ("GET", format!("/graphs/{id}/clusters?method=louvain"), None),
        ("GET", format!("/graphs/{id}/clusters?method=label-propagation&seed=3"), None),
        ("GET", format!("/graphs/{id}/clusters?method=semantic"), None),
    ];
    for (method, uri, body) in requests {
        let (status, resp) = call(&app, method, &uri, body).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {resp}");
        assert_eq!(app.store.get(&id).unwrap().snapshot().content_hash(), before, "{uri}");
    }
}

#[tokio::test]
async fn subgraph_matches_oracle() {
    let g = fixture_graph();
    let id = g.meta.graph_id.clone();
    let files = ["src/poetry/console/commands/new.py", "src/poetry/layouts/layout.py"];
    let seeds: BTreeSet<NodeId> = files.iter().map(|f| g.node_by_path(f).unwrap().id).collect();
    for depth in [0, 1, 2] {
        let ids = bfs_oracle(&g, &seeds, depth);
        let ReadResult::Subgraph { nodes, edges } = g.read_query(&ReadRequest::SubgraphExtract { nodes: ids.into_iter().collect() }).unwrap() else {
            unreachable!()
        };
        let app = app_with(vec![g.clone()]);
        let (status, body) = call(&app, "GET", &format!("/graphs/{id}/subgraph?files={}&depth={depth}", files.join(",")), None).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["nodes"], serde_json::to_value(&nodes).unwrap(), "depth {depth}");
        assert_eq!(body["edges"], serde_json::to_value(&edges).unwrap(), "depth {depth}");
    }
}

#[tokio::test]
async fn node_detail_groups_neighbors() {
    let g = fixture_graph();
    let id = g.meta.graph_id.clone();
    let app = app_with(vec![g]);
    let (status, body) = call(&app, "GET", &format!("/graphs/{id}/nodes?path=src/poetry/console/commands/new.py"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["node"]["kind"], "File");
    assert!(body["snippet"].as_str().unwrap().contains("class"));
    assert!(body["neighbors"]["Implements"]["outgoing"].as_array().unwrap().len() >= 1);
    assert!(body["neighbors"]["Contains"]["incoming"].as_array().unwrap().len() == 1);
    let node_id = body["neighbors"]["Implements"]["outgoing"][0]["id"].as_u64().unwrap();
    let (status, by_id) = call(&app, "GET", &format!("/graphs/{id}/nodes?id={node_id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(by_id["node"]["id"], node_id);
}

#[tokio::test]
async fn error_statuses() {
    let g = fixture_graph();
    let id = g.meta.graph_id.clone();
    let app = app_with(vec![g]);
    let cases: Vec<(&str, String, Option<String>, StatusCode)> = vec![
        ("GET", "/graphs/nope/stats".into(), None, StatusCode::NOT_FOUND),
        ("GET", format!("/graphs/{id}/nodes?path=missing.py"), None, StatusCode::NOT_FOUND),
        ("GET", format!("/graphs/{id}/nodes?id=999999"), None, StatusCode::NOT_FOUND),
        ("GET", format!("/graphs/{id}/nodes"), None, StatusCode::BAD_REQUEST),
        ("GET", format!("/graphs/{id}/subgraph?files=missing.py"), None, StatusCode::NOT_FOUND),
        ("GET", format!("/graphs/{id}/subgraph?nodes=1&depth=9"), None, StatusCode::BAD_REQUEST),
        ("GET", format!("/graphs/{id}/clusters?method=bogus"), None, StatusCode::BAD_REQUEST),
        ("POST", format!("/graphs/{id}/search"), Some(r#"{"query":"x","k":0}"#.into()), StatusCode::BAD_REQUEST),
        ("POST", format!("/graphs/{id}/search"), Some(r#"{"query":"   "}"#.into()), StatusCode::BAD_REQUEST),
        ("POST", format!("/graphs/{id}/search"), Some(r#"{"query":"x","budget_fraction":1.5}"#.into()), StatusCode::BAD_REQUEST),
        ("POST", format!("/graphs/{id}/search"), Some(r#"{"query":"x","colour":"red"}"#.into()), StatusCode::BAD_REQUEST),
        ("POST", format!("/graphs/{id}/search"), Some("{not json".into()), StatusCode::BAD_REQUEST),
        ("POST", format!("/graphs/{id}/search"), Some(r#"{"query":"x","mode":"psychic"}"#.into()), StatusCode::BAD_REQUEST),
        ("POST", "/graphs/nope/search".into(), Some(r#"{"query":"x"}"#.into()), StatusCode::NOT_FOUND),
        ("POST", "/graphs".into(), Some(r#"{"repo":"/definitely/not/here"}"#.into()), StatusCode::BAD_REQUEST),
        ("POST", "/graphs".into(), Some("{}".into()), StatusCode::BAD_REQUEST),
        ("GET", "/jobs/unknown".into(), None, StatusCode::NOT_FOUND),
    ];
    for (method, uri, body, expected) in cases {
        let (status, resp) = call_raw(repograph_cli::api::router(app.clone()), method, &uri, body).await;
        assert_eq!(status, expected, "{method} {uri}: {resp}");
        assert!(resp["error"].is_string());
    }
}

#[tokio::test]
async fn llm_modes_degrade_without_provider() {
    let g = fixture_graph();
    let id = g.meta.graph_id.clone();
    let app = app_with(vec![g]);
    let (status, body) = call(&app, "POST", &format!("/graphs/{id}/search"), Some(json!({"query": "lock file order", "mode": "selective_llm", "k": 3}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["results"].as_array().unwrap().len(), 3);
    assert!(!body["diagnostics"]["stage_warnings"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn unreachable_embedder_is_503() {
    let g = fixture_graph();
    let id = g.meta.graph_id.clone();
    let store = repograph_cli::store::GraphStore::in_memory();
    store.insert(g).unwrap();
    let mut cfg = repograph_cli::config::ServiceConfig::default();
    let mut emb = repograph_core::enrich::HttpProviderConfig::new("http://127.0.0.1:9");
    emb.retries = 0;
    emb.timeout_ms = 500;
    cfg.embedder = Some(emb);
    let app = std::sync::Arc::new(repograph_cli::api::App::new(cfg, store, repograph_cli::audit::AuditLog::in_memory()));
    let (status, _) = call(&app, "POST", &format!("/graphs/{id}/search"), Some(json!({"query": "x"}))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn every_request_is_audited_once() {
    let g = fixture_graph();
    let id = g.meta.graph_id.clone();
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("audit.jsonl");
    let store = repograph_cli::store::GraphStore::in_memory();
    store.insert(g).unwrap();
    let app = std::sync::Arc::new(repograph_cli::api::App::new(
        Default::default(),
        store,
        repograph_cli::audit::AuditLog::open(&log).unwrap(),
    ));
    let uris = [
        ("GET", format!("/graphs/{id}/stats")),
        ("GET", "/graphs/missing/stats".to_string()),
        ("GET", "/healthz".to_string()),
        ("GET", format!("/graphs/{id}/nodes?kind=File")),
    ];
    for (m, u) in &uris {
        call(&app, m, u, None).await;
    }
    call(&app, "POST", &format!("/graphs/{id}/search"), Some(json!({"query": "installer"}))).await;
    let records = app.audit.records();
    assert_eq!(records.len(), 4);
    assert_eq!(records[0].graph_id.as_deref(), Some(id.as_str()));
    assert_eq!(records[1].outcome, 404);
    assert_eq!(records[3].endpoint, format!("POST /graphs/{id}/search"));
    assert_eq!(records[3].request_digest.len(), 64);
    let lines: Vec<Value> = std::fs::read_to_string(&log).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
}

#[tokio::test]
async fn build_job_then_update_with_revision_check() {
    let (repo, first, second) = two_commit_repo();
    let app = app_with(vec![]);
    let (status, body) = call(&app, "POST", "/graphs", Some(json!({"repo": repo.path(), "rev": first}))).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{body}");
    let job = wait_job(&app, body["job_id"].as_str().unwrap()).await;
    assert_eq!(job["state"], "succeeded", "{job}");
    let id = job["graph_id"].as_str().unwrap().to_string();
    assert_eq!(job["result"]["revision"], first.as_str());

    let (_, health) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(health["graphs_loaded"], 1);

    let (status, body) = call(&app, "POST", &format!("/graphs/{id}/update"), Some(json!({"old_revision": second, "new_revision": second}))).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");

    let (status, body) = call(&app, "POST", &format!("/graphs/{id}/update"), Some(json!({"old_revision": first, "new_revision": second}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!((body["added"].as_u64(), body["modified"].as_u64(), body["deleted"].as_u64()), (Some(1), Some(1), Some(1)));

    let (_, stats) = call(&app, "GET", &format!("/graphs/{id}/stats"), None).await;
    assert_eq!(stats["revision"], second.as_str());
    let (status, _) = call(&app, "GET", &format!("/graphs/{id}/nodes?path=pkg/b.py"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", &format!("/graphs/{id}/nodes?path=pkg/c.py"), None).await;
    assert_eq!(status, StatusCode::OK);

    // Updating from the old revision again is now a conflict.
    let (status, _) = call(&app, "POST", &format!("/graphs/{id}/update"), Some(json!({"old_revision": first, "new_revision": second}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn snapshot_load_job() {
    let g = fixture_graph();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    g.save_snapshot(&path, Default::default()).unwrap();
    let app = app_with(vec![]);
    let (status, body) = call(&app, "POST", "/graphs", Some(json!({"snapshot": path}))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let job = wait_job(&app, body["job_id"].as_str().unwrap()).await;
    assert_eq!(job["state"], "succeeded");
    assert_eq!(job["graph_id"], g.meta.graph_id.as_str());
    assert_eq!(app.store.get(&g.meta.graph_id).unwrap().snapshot().content_hash(), g.content_hash());
}

fn strip_timings(mut v: Value) -> Value {
    v["diagnostics"]["timings_ms"] = Value::Null;
    v
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn searches_during_update_see_one_version() {
    let (repo, first, second) = two_commit_repo();
    let cfg = repograph_cli::config::ServiceConfig::default();
    let providers = ProviderSet::from_config(&cfg);
    let (old, _) = ops::build(repo.path(), &first, false, &providers, &cfg).unwrap();
    let mut new = old.clone();
    ops::update(&mut new, repo.path(), &first, &second, false, &providers, &cfg).unwrap();
    let query = "parse and validate the config file";
    let mut req = cfg.request_template();
    req.query_text = query.into();
    req.k = 3;
    let expect = |g: &KnowledgeGraph| {
        // Through text, as the HTTP body is, so float parsing matches.
        let text = serde_json::to_string(&ops::search(g, &req, &providers).unwrap()).unwrap();
        strip_timings(serde_json::from_str(&text).unwrap())
    };
    let (expect_old, expect_new) = (expect(&old), expect(&new));
    assert_ne!(expect_old, expect_new);

    let id = old.meta.graph_id.clone();
    let app = app_with(vec![old]);
    let searches: Vec<_> = (0..24)
        .map(|_| {
            let app = app.clone();
            let uri = format!("/graphs/{id}/search");
            tokio::spawn(async move { call(&app, "POST", &uri, Some(json!({"query": query, "k": 3}))).await })
        })
        .collect();
    let (status, _) = call(&app, "POST", &format!("/graphs/{id}/update"), Some(json!({"old_revision": first, "new_revision": second}))).await;
    assert_eq!(status, StatusCode::OK);
    for s in searches {
        let (status, body) = s.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        let body = strip_timings(body);
        assert!(body == expect_old || body == expect_new, "{body}\nOLD {expect_old}\nNEW {expect_new}");
    }
    let (_, after) = call(&app, "POST", &format!("/graphs/{id}/search"), Some(json!({"query": query, "k": 3}))).await;
    assert_eq!(strip_timings(after), expect_new);
}
