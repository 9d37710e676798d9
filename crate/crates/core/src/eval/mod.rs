//! Issue-driven evaluation: test-case generation, retrieval metrics, runs and comparisons.

pub mod cases;
pub mod host;
pub mod metrics;
pub mod run;

pub use cases::{closing_issue_refs, generate_test_cases, load_cases, normalize_path, read_jsonl, save_cases, write_jsonl, Generation, SkippedPull, TestCase};
pub use host::{FixtureData, FixtureHost, GitHubClient, HostClient, Issue, PullRequest, RecordingHost};
pub use metrics::{fbeta, fbeta_at_k, median, precision, precision_at_k, recall, recall_at_k, MetricRow, DEFAULT_BETA};
pub use run::{
    ab_compare, primary_languages, render_ab_table, render_latency_table, render_results_table, run_eval, AbReport, CaseDelta, CaseResult,
    EvalOptions, EvalReport, LatencyRow, LatencySummary, MedianDeltas, NamedConfig, AB_ROWS, LATENCY_HEADER,
};
