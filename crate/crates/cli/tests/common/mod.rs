#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use repograph_cli::api::{router, App};
use repograph_cli::audit::AuditLog;
use repograph_cli::config::ServiceConfig;
use repograph_cli::ops;
use repograph_cli::providers::ProviderSet;
use repograph_cli::store::GraphStore;
use repograph_core::KnowledgeGraph;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

pub fn core_fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

fn copy_dir(src: &Path, dst: &Path) {
    std::fs::create_dir_all(dst).unwrap();
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let to = dst.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &to);
        } else {
            std::fs::copy(entry.path(), to).unwrap();
        }
    }
}

/// The mini Poetry fixture copied outside any git work tree.
pub fn fixture_copy() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&core_fixture("mini_poetry"), dir.path());
    dir
}

pub fn fixture_graph() -> KnowledgeGraph {
    let dir = fixture_copy();
    let cfg = ServiceConfig::default();
    ops::build(dir.path(), "fixture", false, &ProviderSet::from_config(&cfg), &cfg).unwrap().0
}

fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["-c", "user.name=t", "-c", "user.email=t@example.com", "-c", "commit.gpgsign=false"])
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).trim().to_string()
}

/// Repository with two commits; the second modifies, adds and deletes a file.
pub fn two_commit_repo() -> (TempDir, String, String) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    git(p, &["init", "-q"]);
    std::fs::create_dir_all(p.join("pkg")).unwrap();
    std::fs::write(p.join("pkg/a.py"), "def alpha():\n    \"\"\"Parse the config file.\"\"\"\n    return 1\n").unwrap();
    std::fs::write(p.join("pkg/b.py"), "from pkg.a import alpha\n\n\ndef beta():\n    return alpha()\n").unwrap();
    git(p, &["add", "-A"]);
    git(p, &["commit", "-q", "-m", "one"]);
    let first = git(p, &["rev-parse", "HEAD"]);
    std::fs::write(p.join("pkg/a.py"), "def alpha():\n    \"\"\"Parse and validate the config file.\"\"\"\n    return 2\n").unwrap();
    std::fs::write(p.join("pkg/c.py"), "from pkg.a import alpha\n\n\ndef gamma():\n    return alpha() + 1\n").unwrap();
    std::fs::remove_file(p.join("pkg/b.py")).unwrap();
    git(p, &["add", "-A"]);
    git(p, &["commit", "-q", "-m", "two"]);
    let second = git(p, &["rev-parse", "HEAD"]);
    (dir, first, second)
}

pub fn app_with(graphs: Vec<KnowledgeGraph>) -> Arc<App> {
    let store = GraphStore::in_memory();
    for g in graphs {
        store.insert(g).unwrap();
    }
    Arc::new(App::new(ServiceConfig::default(), store, AuditLog::in_memory()))
}

pub async fn call(app: &Arc<App>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_raw(router(app.clone()), method, uri, body.map(|b| b.to_string())).await
}

pub async fn call_raw(router: Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = router.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

/// Polls a job until it leaves the queued/running states.
pub async fn wait_job(app: &Arc<App>, job_id: &str) -> Value {
    for _ in 0..600 {
        let (status, job) = call(app, "GET", &format!("/jobs/{job_id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        if job["state"] == "succeeded" || job["state"] == "failed" {
            return job;
        }
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    }
    panic!("job {job_id} did not finish");
}
