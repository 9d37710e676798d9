//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repograph_core::clustering::{dominant_labels, label_propagation, louvain, modularity, WeightedGraph};
use repograph_core::enrich::{enrich_graph, EnrichCache, EnrichOptions, StubEmbedder, StubSummarizer};
use repograph_core::eval::*;
use repograph_core::graph::snapshot::EmbeddingEncoding;
use repograph_core::graph::traverse::TraversalConfig;
use repograph_core::graph::{compare, Direction};
use repograph_core::ingest::{build_graph, diff_revisions, update_graph, AdapterRegistry, BuildOptions, GitCheckout};
use repograph_core::retrieval::*;
use repograph_core::synthetic::{generate, random_unit, SyntheticSpec};
use repograph_core::{EdgeKind, KnowledgeGraph, NodeId, NodeKind};

use common::oracle;
use common::suites::{discovery_suite, traversal_suite};

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        return Err(format!("took {:.2}s, limit {:.0}s", took.as_secs_f64(), limit.as_secs_f64()));
    }
    Ok(())
}

fn cosine() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dim = rng.random_range(1..128);
        let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = cosine_similarity(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((s - oracle::cosine(&a, &b)).abs());
        for alpha in [1e-6, 1.0, 1e6] {
            let scaled: Vec<f64> = a.iter().map(|x| x * alpha).collect();
            let t = cosine_similarity(&scaled, &b).map_err(|e| e.to_string())?;
            ensure!((t - s).abs() < 1e-9, "scale {alpha} moved similarity by {}", (t - s).abs());
        }
    }
    ensure!(worst < 1e-9, "max oracle deviation {worst}");
    within(Duration::from_secs(1), start)?;
    Ok(format!("1000 pairs, max deviation {worst:.1e}"))
}

fn semantic_exactness() -> Result<String, String> {
    let start = Instant::now();
    let n = 2000;
    let spec = SyntheticSpec {
        folders: 100,
        files: 500,
        classes: 200,
        functions: 500,
        member_functions: n - 1 - 100 - 500 - 200 - 500,
        calls: 2000,
        inherits: 20,
        refers: 500,
        tests: 50,
        dim: Some(64),
        code_embeddings: false,
        seed: 202,
    };
    let g = generate(&spec).map_err(|e| e.to_string())?;
    ensure!(g.node_count() == n, "graph has {} nodes", g.node_count());
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let kinds = default_semantic_kinds();
    let mut checked = 0;
    for _ in 0..10 {
        let q = random_unit(&mut rng, 64);
        let bundle = QueryBundle {
            raw_text: "q".into(),
            preprocessed_text: None,
            texts: vec!["q".into()],
            embeddings: vec![q.clone()],
            mode: PreprocessMode::None,
            warnings: vec![],
        };
        for k in [1, 10, 50] {
            let got = semantic_search(&g, &bundle, &kinds, k, SelectivePolicy::PerNodeMax).map_err(|e| e.to_string())?;
            let got: Vec<(NodeId, f64)> = got.hits.iter().map(|h| (h.node, h.score)).collect();
            ensure!(got == oracle::brute_force_rank(&g, q.as_slice(), &kinds, k), "k={k} differs from full scan");
            checked += 1;
        }
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!("{checked} queries on {n} nodes identical to full scan"))
}

fn traversal_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut configs = 0;
    for seed in 0..200 {
        let g = generate(&SyntheticSpec::random_small(seed, 50)).map_err(|e| e.to_string())?;
        let ids: Vec<NodeId> = g.node_ids().collect();
        for _ in 0..3 {
            let mut edges: Vec<EdgeKind> = EdgeKind::ALL.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            if edges.is_empty() {
                edges.push(EdgeKind::ALL[rng.random_range(0..EdgeKind::ALL.len())]);
            }
            let nodes: Vec<NodeKind> = NodeKind::ALL.into_iter().filter(|_| rng.random_bool(0.7)).collect();
            let config = TraversalConfig::new(edges, nodes, Direction::ALL[rng.random_range(0..3)], rng.random_range(1..=4));
            let seeds: BTreeSet<NodeId> = (0..rng.random_range(1..=4)).map(|_| ids[rng.random_range(0..ids.len())]).collect();
            let want = oracle::bfs(&g, &seeds, &config);
            let got = traverse_expand(&g, &seeds, &TraversalMode::Custom(config.clone())).map_err(|e| e.to_string())?;
            ensure!(got == want, "graph {seed}, config {config:?}");
            configs += 1;
        }
        let hits: BTreeSet<NodeId> = ids.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
        let got = traverse_expand(&g, &hits, &TraversalMode::Default).map_err(|e| e.to_string())?;
        ensure!(got == oracle::default_expansion(&g, &hits), "default expansion differs on graph {seed}");
    }
    ensure!(configs >= 500, "only {configs} configs");
    within(Duration::from_secs(30), start)?;
    Ok(format!("200 graphs, {configs} configs"))
}

fn poetry_metric_fixture() -> Result<String, String> {
    let truth: BTreeSet<String> = [
        "src/poetry/console/commands/new.py",
        "src/poetry/console/commands/init.py",
        "tests/console/commands/test_new.py",
        "tests/console/commands/test_init.py",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    let mut ranked: Vec<String> = (0..16).map(|i| format!("src/poetry/other_{i}.py")).collect();
    for (slot, path) in [2, 5, 11, 19].into_iter().zip(&truth) {
        ranked.insert(slot, path.clone());
    }
    ensure!(ranked.len() == 20, "list has {} items", ranked.len());
    let row = MetricRow::compute(&ranked, &truth, 20, DEFAULT_BETA).map_err(|e| e.to_string())?;
    ensure!(row.recall_at_k == 1.0, "Recall@20 = {}", row.recall_at_k);
    ensure!(row.precision_at_k == 0.2, "Precision@20 = {}", row.precision_at_k);
    Ok(format!("Recall@20 = {:.2}, Precision@20 = {:.2}", row.recall_at_k, row.precision_at_k))
}

fn git(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["-c", "user.name=fixture", "-c", "user.email=fixture@example.com", "-c", "commit.gpgsign=false"])
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn write(dir: &Path, rel: &str, content: &str) {
    let p = dir.join(rel);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    std::fs::write(p, content).unwrap();
}

fn commit(dir: &Path, msg: &str) -> Result<String, String> {
    git(dir, &["add", "-A"])?;
    git(dir, &["commit", "-q", "-m", msg])?;
    git(dir, &["rev-parse", "HEAD"])
}

fn enrich(g: &mut KnowledgeGraph) -> Result<(), String> {
    enrich_graph(g, &StubSummarizer, &StubEmbedder::default(), &EnrichCache::new(), &EnrichOptions::default())
        .map(|_| ())
        .map_err(|e| e.to_string())
}

fn incremental_equivalence() -> Result<String, String> {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    git(d, &["init", "-q", "-b", "main"])?;
    write(d, "src/shop/__init__.py", "");
    write(d, "src/shop/cart.py", "def total(items):\n    \"\"\"Sum item prices.\"\"\"\n    return sum(items)\n\ndef checkout(items):\n    return total(items)\n");
    write(d, "src/shop/legacy.py", "from shop.cart import total\n\ndef old_total(items):\n    return total(items)\n");
    write(d, "tests/test_cart.py", "from shop.cart import checkout\n\ndef test_checkout():\n    assert checkout([1]) == 1\n");
    let c1 = commit(d, "c1")?;
    write(d, "src/shop/pay/gateway.py", "from shop.cart import checkout\n\nclass Gateway:\n    def charge(self, items):\n        return checkout(items)\n");
    write(d, "src/shop/cart.py", "def total(items):\n    \"\"\"Sum item prices with tax.\"\"\"\n    return sum(items) * 1.2\n\ndef checkout(items):\n    return total(items)\n");
    let c2 = commit(d, "c2")?;
    std::fs::remove_file(d.join("src/shop/legacy.py")).map_err(|e| e.to_string())?;
    write(d, "src/shop/cart.py", "def checkout(items):\n    \"\"\"Charge directly.\"\"\"\n    return sum(items)\n");
    let c3 = commit(d, "c3")?;

    let reg = AdapterRegistry::default();
    let opts = BuildOptions::default();
    let url = d.to_string_lossy().to_string();
    let open = |rev: &str| GitCheckout::open(d, rev).map_err(|e| e.to_string());
    let (mut g, _) = build_graph(&open(&c1)?, &url, &reg, &opts).map_err(|e| e.to_string())?;
    enrich(&mut g)?;
    let mut seen = BTreeSet::new();
    for (old, new) in [(&c1, &c2), (&c2, &c3)] {
        let cs = diff_revisions(d, old, new).map_err(|e| e.to_string())?;
        seen.extend(cs.added.iter().map(|_| "add"));
        seen.extend(cs.modified.iter().map(|_| "modify"));
        seen.extend(cs.deleted.iter().map(|_| "delete"));
        update_graph(&mut g, &open(new)?, &cs, &reg, &opts).map_err(|e| e.to_string())?;
        enrich(&mut g)?;
    }
    ensure!(seen.len() == 3, "change kinds exercised: {seen:?}");
    let (mut fresh, _) = build_graph(&open(&c3)?, &url, &reg, &opts).map_err(|e| e.to_string())?;
    enrich(&mut fresh)?;
    let diffs = compare::differences(&g, &fresh);
    ensure!(diffs.is_empty(), "{} differences, first: {}", diffs.len(), diffs[0]);
    ensure!(g.meta.revision == c3, "revision {}", g.meta.revision);
    within(Duration::from_secs(10), start)?;
    Ok(format!("{} nodes, {} edges equal to rebuild", g.node_count(), g.edge_count()))
}

/// Q over a dense adjacency matrix, written out from the definition.
fn q_dense(a: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn random_connected(rng: &mut ChaCha8Rng, max_n: usize) -> (usize, Vec<(usize, usize, f64)>) {
    let n = rng.random_range(2..=max_n);
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|v| (rng.random_range(0..v), v, 1.0)).collect();
    let p = rng.random_range(0.0..0.6);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v, rng.random_range(1..=3) as f64));
            }
        }
    }
    (n, edges)
}

fn dense(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v, w) in edges {
        a[u][v] += w;
        a[v][u] += w;
    }
    a
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

fn two_cliques_bridge() -> WeightedGraph {
    let mut edges = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    edges.push((4, 5, 1.0));
    WeightedGraph::from_edges(10, edges)
}

fn louvain_correctness() -> Result<String, String> {
    let out = louvain(&two_cliques_bridge(), 1.0);
    ensure!(same_partition(&out.labels, &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]), "cliques split as {:?}", out.labels);

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for i in 0..200 {
        let (n, edges) = random_connected(&mut rng, 8);
        let a = dense(n, &edges);
        let out = louvain(&WeightedGraph::from_edges(n, edges), 1.0);
        let q = q_dense(&a, &out.labels);
        let singletons = q_dense(&a, &(0..n).collect::<Vec<_>>());
        ensure!(q >= singletons - 1e-12, "graph {i}: Q {q} below singletons {singletons}");
        let communities = out.labels.iter().max().unwrap() + 1;
        for v in 0..n {
            for c in 0..=communities {
                let mut moved = out.labels.clone();
                moved[v] = c;
                ensure!(q_dense(&a, &moved) <= q + 1e-12, "graph {i}: moving node {v} to {c} improves Q");
            }
        }
    }

    let tri = vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)];
    let q = modularity(&WeightedGraph::from_edges(6, tri), &[0, 0, 0, 1, 1, 1]);
    ensure!((q - 0.5).abs() < 1e-9, "two triangles Q = {q}");
    Ok("two cliques recovered; 200 local optima; two-triangle Q = 0.5".into())
}

fn label_propagation_determinism() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for i in 0..50 {
        let (n, edges) = random_connected(&mut rng, 30);
        let g = WeightedGraph::from_edges(n, edges);
        let seed = rng.random::<u64>();
        let first = label_propagation(&g, seed);
        for _ in 0..9 {
            ensure!(label_propagation(&g, seed) == first, "graph {i}: runs differ for seed {seed}");
        }
        for v in 0..n {
            ensure!(dominant_labels(&g, &first.labels, v).contains(&first.labels[v]), "graph {i}: node {v} not at a fixed point");
        }
    }
    Ok("50 graphs x 10 runs identical; fixed point holds".into())
}

fn search_latency() -> Result<String, String> {
    let dim = 256;
    let g = generate(&SyntheticSpec::latency_scale(606, dim)).map_err(|e| e.to_string())?;
    let (nodes, edges) = (g.node_count(), g.edge_count());
    ensure!(nodes == 16_700, "{nodes} nodes");
    ensure!(edges >= 165_000, "{edges} edges");
    let embedder = StubEmbedder { dim, seed: 0 };
    let mut req = RetrievalRequest::new("installer resolves the lock file before writing packages", 50);
    req.mode = PreprocessMode::None;
    req.traversal = TraversalMode::Default;
    let start = Instant::now();
    let out = search_relevant(&g, &req, Providers::embedder_only(&embedder)).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!(!out.results.is_empty(), "no results");
    ensure!(took < Duration::from_secs(4), "search took {:.2}s on {nodes} nodes / {edges} edges", took.as_secs_f64());
    Ok(format!("{:.3}s on {nodes} nodes / {edges} edges", took.as_secs_f64()))
}

fn metric_properties() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut universe: Vec<String> = (0..100).map(|i| format!("f{i}.py")).collect();
    for t in 0..10_000 {
        universe.shuffle(&mut rng);
        let retrieved = universe[..rng.random_range(0..=60)].to_vec();
        universe.shuffle(&mut rng);
        let relevant: BTreeSet<String> = universe[..rng.random_range(1..=15)].iter().cloned().collect();
        let k = rng.random_range(1..=80);
        let beta = rng.random_range(0.05..10.0);
        let err = |e: repograph_core::Error| format!("tuple {t}: {e}");
        let r = recall_at_k(&retrieved, &relevant, k).map_err(err)?;
        let p = precision_at_k(&retrieved, &relevant, k).map_err(err)?;
        let f = fbeta_at_k(&retrieved, &relevant, k, beta).map_err(err)?;
        for (name, v) in [("recall", r), ("precision", p), ("fbeta", f)] {
            ensure!((0.0..=1.0).contains(&v), "tuple {t}: {name} = {v}");
        }
        ensure!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12, "tuple {t}: F {f} outside [{p}, {r}]");
        let r_next = recall_at_k(&retrieved, &relevant, k + 1).map_err(err)?;
        ensure!(r_next >= r, "tuple {t}: recall fell from {r} to {r_next} at k+1");
    }
    Ok("10000 tuples".into())
}

fn snapshot_round_trip() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for seed in 0..50u64 {
        let mut spec = SyntheticSpec::random_small(seed, 60);
        spec.dim = Some(8 + (seed as usize % 3) * 8);
        spec.code_embeddings = seed % 2 == 0;
        let g = generate(&spec).map_err(|e| e.to_string())?;
        let encoding = if seed % 2 == 0 { EmbeddingEncoding::Base64 } else { EmbeddingEncoding::FloatArray };
        let path = tmp.path().join(format!("g{seed}.json"));
        g.save_snapshot(&path, encoding).map_err(|e| e.to_string())?;
        let back = KnowledgeGraph::load_snapshot(&path).map_err(|e| e.to_string())?;
        ensure!(back == g, "graph {seed} changed after round trip");
        for n in g.nodes() {
            let m = back.node(n.id).ok_or(format!("graph {seed}: node {} lost", n.id.0))?;
            for (a, b) in [(&n.description_embedding, &m.description_embedding), (&n.code_embedding, &m.code_embedding)] {
                ensure!(a.as_ref().map(|e| e.to_le_bytes()) == b.as_ref().map(|e| e.to_le_bytes()), "graph {seed}: embedding bytes differ on node {}", n.id.0);
            }
        }
    }
    Ok("50 graphs, both encodings".into())
}

fn ab_directions_and_tables() -> Result<String, String> {
    let request = |k: usize, discovery: bool, traversal: TraversalMode| {
        let mut r = RetrievalRequest::new("", k);
        r.enable_discovery = discovery;
        r.traversal = traversal;
        r
    };
    let opts = EvalOptions::new("suite/repo");
    let err = |e: repograph_core::Error| e.to_string();

    let s = discovery_suite(808, 9);
    let ab = ab_compare(
        &s.graph,
        &s.cases,
        &NamedConfig::new("Without discovery", request(5, false, TraversalMode::Default)),
        &NamedConfig::new("With discovery", request(5, true, TraversalMode::Default)),
        Providers::embedder_only(&s.embedder),
        &opts,
    )
    .map_err(err)?;
    let (da, db) = (ab.a.median_recall_at_k.unwrap_or(0.0), ab.b.median_recall_at_k.unwrap_or(0.0));
    ensure!(db > da, "discovery median recall {da} -> {db}");

    let t = traversal_suite(809, 9);
    let ab_t = ab_compare(
        &t.graph,
        &t.cases,
        &NamedConfig::new("Without traversal", request(4, false, TraversalMode::Off)),
        &NamedConfig::new("With traversal", request(4, false, TraversalMode::Default)),
        Providers::embedder_only(&t.embedder),
        &opts,
    )
    .map_err(err)?;
    let (ta, tb) = (ab_t.a.median_recall_at_k.unwrap_or(0.0), ab_t.b.median_recall_at_k.unwrap_or(0.0));
    ensure!(tb >= ta, "traversal median recall {ta} -> {tb}");
    ensure!(ab_t.deltas.iter().all(|d| d.recall_at_k >= 0.0), "a case lost recall with traversal");

    let report = run_eval(&s.graph, &s.cases, &request(5, true, TraversalMode::Off), Providers::embedder_only(&s.embedder), &opts).map_err(err)?;
    let results = render_results_table(std::slice::from_ref(&report));
    let header: Vec<&str> = results.lines().next().unwrap_or_default().split('\t').collect();
    let want = [
        "Repository",
        "Languages",
        "Test cases",
        "Files total",
        "Files returned",
        "% Files returned",
        "Median Recall@5",
        "Median Precision@5",
        "Median Fβ@5",
    ];
    ensure!(header == want, "results header {header:?}");
    let mut row = LatencyRow::new(&s.graph, "suite/repo");
    row.absorb(&report);
    let latency = render_latency_table(&[row]);
    let header: Vec<&str> = latency.lines().next().unwrap_or_default().split('\t').collect();
    ensure!(header == LATENCY_HEADER, "latency header {header:?}");
    let ab_table = render_ab_table(&ab);
    let ab_rows: Vec<&str> = ab_table.lines().skip(1).map(|l| l.split('\t').next().unwrap_or_default()).collect();
    ensure!(ab_rows == AB_ROWS, "A/B rows {ab_rows:?}");
    Ok(format!("discovery recall {da} -> {db}; traversal recall {ta} -> {tb}; table columns match"))
}

fn main() {
    let checks: [(&str, Check); 11] = [
        ("cosine similarity", cosine),
        ("semantic search exactness", semantic_exactness),
        ("traversal oracle", traversal_oracle),
        ("poetry metric fixture", poetry_metric_fixture),
        ("incremental equivalence", incremental_equivalence),
        ("louvain correctness", louvain_correctness),
        ("label propagation", label_propagation_determinism),
        ("search latency", search_latency),
        ("metric properties", metric_properties),
        ("snapshot round trip", snapshot_round_trip),
        ("a/b directions and report tables", ab_directions_and_tables),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS  {name:<34} {ms:>7} ms  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<34} {ms:>7} ms  {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
