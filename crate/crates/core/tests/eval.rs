mod common;

use std::collections::{BTreeSet, HashSet};
use std::sync::atomic::Ordering;

use chrono::{DateTime, TimeZone, Utc};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repograph_core::eval::*;
use repograph_core::retrieval::{Providers, RetrievalRequest, TraversalMode};
use repograph_core::{Error, KnowledgeGraph};

use common::suites::{discovery_suite, traversal_suite};

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Brute-force set arithmetic over the k-prefix.
fn oracle(retrieved: &[String], relevant: &BTreeSet<String>, k: usize) -> (f64, f64) {
    let top: HashSet<&String> = retrieved.iter().take(k).collect();
    let inter = top.iter().filter(|p| relevant.contains(**p)).count() as f64;
    (inter / relevant.len() as f64, inter / k as f64)
}

fn random_lists(rng: &mut ChaCha8Rng) -> (Vec<String>, BTreeSet<String>, usize) {
    let mut universe: Vec<String> = (0..80).map(|i| format!("src/f{i}.py")).collect();
    universe.shuffle(rng);
    let n = rng.random_range(1..=50);
    let retrieved = universe[..n].to_vec();
    universe.shuffle(rng);
    let m = rng.random_range(1..=12);
    let relevant = universe[..m].iter().cloned().collect();
    (retrieved, relevant, rng.random_range(1..=60))
}

#[test]
fn metrics_equal_set_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let (retrieved, relevant, k) = random_lists(&mut rng);
        let (r, p) = oracle(&retrieved, &relevant, k);
        let row = MetricRow::compute(&retrieved, &relevant, k, DEFAULT_BETA).unwrap();
        assert!(close(row.recall_at_k, r));
        assert!(close(row.precision_at_k, p));
        let (full_r, _) = oracle(&retrieved, &relevant, retrieved.len());
        assert!(close(row.recall, full_r));
        assert!(close(row.precision.unwrap(), full_r * relevant.len() as f64 / retrieved.len() as f64));
        let expect_f = if p + r == 0.0 { 0.0 } else { 10.0 * p * r / (9.0 * p + r) };
        assert!(close(row.fbeta_at_k, expect_f));
        assert_eq!(row.found, r > 0.0);
        let pk = row.precision_at_k * k as f64;
        let rk = row.recall_at_k * relevant.len() as f64;
        assert!((pk - pk.round()).abs() < 1e-9 && (rk - rk.round()).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn metric_properties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (retrieved, relevant, _) = random_lists(&mut rng);
        let mut last = 0.0;
        for k in 1..=retrieved.len() + 5 {
            let r = recall_at_k(&retrieved, &relevant, k).unwrap();
            let p = precision_at_k(&retrieved, &relevant, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&p));
            prop_assert!(r >= last);
            last = r;
            let f = fbeta_at_k(&retrieved, &relevant, k, 3.0).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            if p > 0.0 && r > 0.0 {
                prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
            }
        }
        prop_assert!(close(last, recall(&retrieved, &relevant).unwrap()));
    }

    #[test]
    fn fbeta_fixed_point(x in 0.0f64..=1.0, beta in 0.01f64..20.0) {
        prop_assert!((fbeta(x, x, beta).unwrap() - x).abs() < 1e-12);
    }

    #[test]
    fn median_is_permutation_invariant(mut v in prop::collection::vec(0.0f64..1.0, 1..40), seed in any::<u64>()) {
        let m = median(&v).unwrap();
        v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(median(&v).unwrap(), m);
    }
}

#[test]
fn metric_examples() {
    let truth = set(&["a.py", "b.py", "c.py", "d.py"]);
    let mut twenty: Vec<String> = truth.iter().cloned().collect();
    twenty.extend((0..16).map(|i| format!("x{i}.py")));
    assert_eq!(recall(&twenty, &truth).unwrap(), 1.0);
    assert!(close(precision(&twenty, &truth).unwrap(), 0.2));

    let mut ten: Vec<String> = vec!["a.py".into(), "b.py".into()];
    ten.extend((0..8).map(|i| format!("x{i}.py")));
    assert_eq!(recall_at_k(&ten, &truth, 10).unwrap(), 0.5);
    // Misses past the end of the list still count against precision.
    assert!(close(precision_at_k(&ten, &truth, 20).unwrap(), 0.1));

    assert_eq!(recall(&ten, &truth).unwrap(), recall_at_k(&ten, &truth, 10).unwrap());
    assert_eq!(recall(&["z"], &truth).unwrap(), 0.0);
    assert!(matches!(recall(&ten, &BTreeSet::new()), Err(Error::UndefinedMetric(_))));
    assert!(matches!(precision::<String>(&[], &truth), Err(Error::UndefinedMetric(_))));
    assert!(matches!(recall_at_k(&ten, &truth, 0), Err(Error::UndefinedMetric(_))));

    assert!(close(fbeta(0.2, 1.0, 1.0).unwrap(), 1.0 / 3.0));
    assert_eq!(median(&[0.2, 0.5, 1.0]), Some(0.5));
    assert_eq!(median(&[0.2, 0.4, 0.6, 1.0]), Some(0.5));
    assert_eq!(median(&[]), None);
}

fn fixture_host() -> FixtureHost {
    FixtureHost::load(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/host/poetry.json")).unwrap()
}

fn cutoff() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 6, 1, 0, 0, 0).unwrap()
}

#[test]
fn fixture_generation() {
    let host = fixture_host();
    let gen = generate_test_cases("python-poetry/poetry", "main", cutoff(), &host);
    assert!(gen.errors.is_empty(), "{:?}", gen.errors);
    let ids: Vec<(u64, u64)> = gen.cases.iter().map(|c| (c.pr_id, c.issue_id)).collect();
    assert_eq!(ids, [(10431, 10429), (10440, 10436), (10452, 10450)]);

    let poetry = &gen.cases[0];
    assert!(poetry.ground_truth.contains("src/poetry/console/commands/new.py"));
    assert_eq!(poetry.ground_truth.len(), 4);
    assert_eq!(poetry.revision, "3f1c2a9d0b7e4c5a8e6f1d2c3b4a5968778695a4");
    assert!(poetry.issue_text.starts_with("Unexpected Behavior: poetry new ."));
    assert_eq!(gen.cases[1].ground_truth, set(&["src/poetry/installation/installer.py", "tests/installation/test_installer.py"]));
    // Docs stay in the ground truth when a source file is also touched.
    assert_eq!(gen.cases[2].ground_truth, set(&["docs/configuration.md", "src/poetry/config/config.py"]));
    assert_eq!(gen.cases[2].issue_text, "POETRY_ environment overrides ignored by config");

    let skipped: Vec<u64> = gen.skipped.iter().map(|s| s.pr).collect();
    assert_eq!(skipped, [10460, 10461, 10462]);
    assert_eq!(gen.skipped[0].reason, "closes 2 issues");

    // JSON Lines round trip.
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &gen.cases).unwrap();
    assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 3);
    assert_eq!(read_jsonl(&buf[..]).unwrap(), gen.cases);
}

#[test]
fn recording_replays_identically() {
    let host = fixture_host();
    let rec = RecordingHost::new(&host);
    let live = generate_test_cases("python-poetry/poetry", "main", cutoff(), &rec);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.json");
    rec.save(&path).unwrap();
    let replay = generate_test_cases("python-poetry/poetry", "main", cutoff(), &FixtureHost::load(&path).unwrap());
    assert_eq!(live, replay);

    let cases = dir.path().join("cases.jsonl");
    save_cases(&cases, &live.cases).unwrap();
    assert_eq!(load_cases(&cases).unwrap(), live.cases);
}

#[test]
fn invalid_case_lines_are_rejected() {
    let empty = r#"{"repo":"r","revision":"x","issue_id":1,"issue_text":"t","pr_id":2,"ground_truth":[]}"#;
    assert!(read_jsonl(empty.as_bytes()).is_err());
    let unnormalized = r#"{"repo":"r","revision":"x","issue_id":1,"issue_text":"t","pr_id":2,"ground_truth":["./a.py"]}"#;
    assert!(read_jsonl(unnormalized.as_bytes()).is_err());
}

struct FailingHost;

impl HostClient for FailingHost {
    fn merged_pulls(&self, _: &str, _: &str, _: DateTime<Utc>) -> repograph_core::Result<Vec<PullRequest>> {
        Err(Error::Provider("rate limited".into()))
    }
    fn pull_files(&self, _: &str, _: u64) -> repograph_core::Result<Vec<String>> {
        unreachable!()
    }
    fn issue(&self, _: &str, _: u64) -> repograph_core::Result<Issue> {
        unreachable!()
    }
}

#[test]
fn host_failure_yields_partial_results() {
    let gen = generate_test_cases("o/r", "main", cutoff(), &FailingHost);
    assert!(gen.cases.is_empty());
    assert_eq!(gen.errors.len(), 1);
}

#[test]
fn github_client_against_mock() {
    let (url, hits) = common::mock_server(|req| {
        assert_eq!(req.headers.iter().find(|(k, _)| k == "authorization").map(|(_, v)| v.as_str()), Some("Bearer t0k"));
        let path = req.path.as_str();
        if path.starts_with("/repos/o/r/pulls?") {
            assert!(path.contains("state=closed") && path.contains("base=main"));
            let body = serde_json::json!([
                {"number": 5, "title": "fix", "body": "Fixes #3", "merged_at": "2025-06-05T00:00:00Z",
                 "updated_at": "2025-06-05T00:00:00Z", "base": {"ref": "main", "sha": "abc"}},
                {"number": 6, "title": "unmerged", "body": "Fixes #4", "merged_at": null,
                 "updated_at": "2025-06-04T00:00:00Z", "base": {"ref": "main", "sha": "abd"}},
                {"number": 7, "title": "broken", "body": "Fixes #8", "merged_at": "2025-06-03T00:00:00Z",
                 "updated_at": "2025-06-03T00:00:00Z", "base": {"ref": "main", "sha": "abe"}}
            ]);
            (200, body.to_string())
        } else if path.starts_with("/repos/o/r/pulls/5/files") {
            (200, r#"[{"filename":"src/a.py"},{"filename":"README.md"}]"#.into())
        } else if path.starts_with("/repos/o/r/pulls/7/files") {
            (200, r#"[{"filename":"src/b.py"}]"#.into())
        } else if path == "/repos/o/r/issues/3" {
            (200, r#"{"title":"Boom","body":"It breaks","created_at":"2025-06-01T00:00:00Z"}"#.into())
        } else {
            (500, "{}".into())
        }
    });
    let client = GitHubClient::new(url, Some("t0k".into()));
    let gen = generate_test_cases("o/r", "main", cutoff(), &client);
    assert_eq!(gen.cases.len(), 1);
    let c = &gen.cases[0];
    assert_eq!((c.pr_id, c.issue_id, c.revision.as_str()), (5, 3, "abc"));
    assert_eq!(c.issue_text, "Boom\n\nIt breaks");
    assert_eq!(c.ground_truth, set(&["README.md", "src/a.py"]));
    // Issue #8 answers 500: logged, the rest kept.
    assert_eq!(gen.errors.len(), 1, "{:?}", gen.errors);
    assert!(hits.load(Ordering::SeqCst) >= 5);
}

fn options() -> EvalOptions {
    let mut o = EvalOptions::new("suite/repo");
    o.parallel = false;
    o
}

fn request(k: usize, discovery: bool, traversal: TraversalMode) -> RetrievalRequest {
    let mut r = RetrievalRequest::new("", k);
    r.enable_discovery = discovery;
    r.traversal = traversal;
    r
}

#[test]
fn perfect_retrieval_gives_unit_medians() {
    let s = discovery_suite(1, 1);
    let report = run_eval(&s.graph, &s.cases, &request(2, true, TraversalMode::Off), Providers::embedder_only(&s.embedder), &options()).unwrap();
    assert_eq!(report.median_recall_at_k, Some(1.0));
    assert_eq!(report.median_precision_at_k, Some(1.0));
    assert_eq!(report.median_fbeta_at_k, Some(1.0));
    assert_eq!(report.percentage_found, Some(1.0));
}

#[test]
fn constructed_suite_medians_are_exact() {
    let s = discovery_suite(2, 9);
    let providers = Providers::embedder_only(&s.embedder);
    let off = run_eval(&s.graph, &s.cases, &request(5, false, TraversalMode::Off), providers, &options()).unwrap();
    assert_eq!(off.median_recall_at_k, Some(0.5));
    assert!(close(off.median_precision_at_k.unwrap(), 0.2));
    assert!(close(off.median_fbeta_at_k.unwrap(), 10.0 * 0.2 * 0.5 / (9.0 * 0.2 + 0.5)));
    let on = run_eval(&s.graph, &s.cases, &request(5, true, TraversalMode::Off), providers, &options()).unwrap();
    assert_eq!(on.median_recall_at_k, Some(1.0));
    assert!(close(on.median_precision_at_k.unwrap(), 0.4));
    assert!(close(on.median_fbeta_at_k.unwrap(), 4.0 / 4.6));
    assert_eq!((on.test_cases, on.failed_cases, on.files_total, on.files_returned), (9, 0, 58, 5));
    assert_eq!(on.languages, ["Python"]);

    // Parallel evaluation gives the same rows.
    let par = run_eval(&s.graph, &s.cases, &request(5, true, TraversalMode::Off), providers, &EvalOptions::new("suite/repo")).unwrap();
    assert_eq!(
        par.cases.iter().map(|c| &c.metrics).collect::<Vec<_>>(),
        on.cases.iter().map(|c| &c.metrics).collect::<Vec<_>>()
    );
}

#[test]
fn failed_cases_are_counted_not_averaged() {
    let s = discovery_suite(4, 3);
    let mut cases = s.cases.clone();
    cases[0].issue_text = "   ".into();
    let report = run_eval(&s.graph, &cases, &request(5, true, TraversalMode::Off), Providers::embedder_only(&s.embedder), &options()).unwrap();
    assert_eq!((report.test_cases, report.failed_cases), (3, 1));
    assert!(report.cases[0].error.is_some());
    assert_eq!(report.median_recall_at_k, Some(1.0));
}

#[test]
fn run_eval_preconditions() {
    let s = discovery_suite(5, 2);
    let p = Providers::embedder_only(&s.embedder);
    assert!(matches!(run_eval(&s.graph, &[], &request(5, true, TraversalMode::Off), p, &options()), Err(Error::InvalidArgument(_))));
    let bare = KnowledgeGraph::new("x", "r");
    assert!(matches!(run_eval(&bare, &s.cases, &request(5, true, TraversalMode::Off), p, &options()), Err(Error::NotEnriched)));
}

#[test]
fn identical_configs_have_zero_deltas() {
    let s = discovery_suite(6, 5);
    let a = NamedConfig::new("a", request(5, true, TraversalMode::Default));
    let b = NamedConfig::new("b", request(5, true, TraversalMode::Default));
    let ab = ab_compare(&s.graph, &s.cases, &a, &b, Providers::embedder_only(&s.embedder), &options()).unwrap();
    assert_eq!(ab.deltas.len(), 5);
    assert!(ab.deltas.iter().all(|d| d.recall_at_k == 0.0 && d.precision_at_k == 0.0 && d.fbeta_at_k == 0.0));
    assert_eq!(ab.median_deltas.recall_at_k, Some(0.0));
}

#[test]
fn discovery_raises_median_recall() {
    let s = discovery_suite(7, 9);
    let a = NamedConfig::new("Without discovery", request(5, false, TraversalMode::Default));
    let b = NamedConfig::new("With discovery", request(5, true, TraversalMode::Default));
    let ab = ab_compare(&s.graph, &s.cases, &a, &b, Providers::embedder_only(&s.embedder), &options()).unwrap();
    assert!(ab.median_deltas.recall_at_k.unwrap() > 0.0);

    let table = render_ab_table(&ab);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "Algorithm\tWithout discovery\tWith discovery");
    assert_eq!(lines[1], "Recall\t0.5\t1");
    let rows: Vec<&str> = lines[1..].iter().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(rows, AB_ROWS);
}

#[test]
fn traversal_never_lowers_recall_on_planted_chains() {
    let s = traversal_suite(8, 9);
    let a = NamedConfig::new("No traversal", request(4, false, TraversalMode::Off));
    let b = NamedConfig::new("Traversal", request(4, false, TraversalMode::Default));
    let ab = ab_compare(&s.graph, &s.cases, &a, &b, Providers::embedder_only(&s.embedder), &options()).unwrap();
    assert!(ab.deltas.iter().all(|d| d.recall_at_k >= 0.0));
    assert!(ab.median_deltas.recall_at_k.unwrap() >= 0.0);
    assert_eq!(ab.a.median_recall_at_k, Some(0.5));
    assert_eq!(ab.b.median_recall_at_k, Some(1.0));
}

#[test]
fn results_table_shape() {
    let s = discovery_suite(9, 3);
    let mut req = request(5, true, TraversalMode::Off);
    req.budget_fraction = Some(0.1);
    let report = run_eval(&s.graph, &s.cases, &req, Providers::embedder_only(&s.embedder), &options()).unwrap();
    let table = render_results_table(&[report.clone()]);
    let lines: Vec<Vec<&str>> = table.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(
        lines[0],
        [
            "Repository",
            "Languages",
            "Test cases",
            "Files total",
            "Files returned",
            "% Files returned",
            "Median Recall@5",
            "Median Precision@5",
            "Median Fβ@5"
        ]
    );
    assert_eq!(lines[1][..6], ["suite/repo", "Python", "3", "46", "5", "10.9%"]);

    let mut row = LatencyRow::new(&s.graph, "suite/repo");
    row.absorb(&report);
    let lat = render_latency_table(&[row]);
    let header: Vec<&str> = lat.lines().next().unwrap().split('\t').collect();
    assert_eq!(header, LATENCY_HEADER);
    let values: Vec<&str> = lat.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(values[2], s.graph.nodes().count().to_string());
    assert_eq!(values[5], "n/a");
    assert_ne!(values[6], "n/a");

    let json = serde_json::to_value(&report).unwrap();
    for key in ["median_recall_at_k", "percentage_found", "latency", "cases", "files_total"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
