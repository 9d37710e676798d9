#![allow(dead_code)]

pub mod oracle;
pub mod suites;

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use repograph_core::enrich::{enrich_graph, stub_embed, EmbedderProvider, EnrichCache, EnrichOptions, StubEmbedder, StubSummarizer};
use repograph_core::ingest::{build_graph, AdapterRegistry, BuildOptions, DirCheckout};
use repograph_core::{EmbeddingVector, KnowledgeGraph};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini_poetry")
}

/// Mini fixture built and enriched with the stub providers.
pub fn enriched_fixture() -> KnowledgeGraph {
    let co = DirCheckout::new(fixture_dir(), "fixture").unwrap();
    let (mut g, _) = build_graph(&co, "mini_poetry", &AdapterRegistry::default(), &BuildOptions::default()).unwrap();
    enrich_graph(
        &mut g,
        &StubSummarizer,
        &StubEmbedder::default(),
        &EnrichCache::new(),
        &EnrichOptions::default(),
    )
    .unwrap();
    g
}

pub struct Request {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

/// Minimal HTTP/1.1 server answering each request with `handler`.
/// Returns the base URL and a request counter.
pub fn mock_server<F>(handler: F) -> (String, Arc<AtomicUsize>)
where
    F: Fn(&Request) -> (u16, String) + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let count = Arc::new(AtomicUsize::new(0));
    let counter = count.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                continue;
            }
            let mut parts = line.split_whitespace();
            let method = parts.next().unwrap_or("").to_string();
            let path = parts.next().unwrap_or("").to_string();
            let mut headers = Vec::new();
            let mut len = 0usize;
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                let h = h.trim_end();
                if h.is_empty() {
                    break;
                }
                if let Some((k, v)) = h.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                    headers.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
                }
            }
            let mut body = vec![0u8; len];
            reader.read_exact(&mut body).unwrap();
            counter.fetch_add(1, Ordering::SeqCst);
            let req = Request {
                method,
                path,
                headers,
                body: String::from_utf8_lossy(&body).into_owned(),
            };
            let (status, reply) = handler(&req);
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    (format!("http://{addr}"), count)
}

/// Embeds known texts from a table and everything else with the stub.
pub struct TableEmbedder {
    pub dim: usize,
    pub table: HashMap<String, EmbeddingVector>,
}

impl EmbedderProvider for TableEmbedder {
    fn identity(&self) -> String {
        "table".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> repograph_core::Result<Vec<EmbeddingVector>> {
        texts
            .iter()
            .map(|t| match self.table.get(t) {
                Some(v) => Ok(v.clone()),
                None => stub_embed(t, self.dim, 0),
            })
            .collect()
    }
}
