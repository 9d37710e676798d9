use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cases::TestCase;
use super::metrics::{median, MetricRow, DEFAULT_BETA};
use crate::graph::{KnowledgeGraph, NodeKind};
use crate::lang::{category_for_path, FileCategory};
use crate::retrieval::{search_relevant, PreprocessMode, Providers, RetrievalRequest, StageTimings};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub repository: String,
    pub beta: f64,
    /// Graph build time to carry into the latency columns.
    #[serde(default)]
    pub build_seconds: Option<f64>,
    #[serde(default = "parallel_default")]
    pub parallel: bool,
}

fn parallel_default() -> bool {
    true
}

impl EvalOptions {
    pub fn new(repository: impl Into<String>) -> Self {
        Self {
            repository: repository.into(),
            beta: DEFAULT_BETA,
            build_seconds: None,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub issue_id: u64,
    pub pr_id: u64,
    pub retrieved: Vec<String>,
    pub ground_truth: Vec<String>,
    pub metrics: Option<MetricRow>,
    pub error: Option<String>,
    pub timings_ms: StageTimings,
    pub total_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub build_seconds: Option<f64>,
    pub median_query_seconds: Option<f64>,
    pub median_stage_ms: StageTimings,
    /// True when queries went through the LLM preprocessing stage.
    pub with_llm: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub repository: String,
    pub languages: Vec<String>,
    pub test_cases: usize,
    pub failed_cases: usize,
    pub files_total: usize,
    pub files_returned: usize,
    pub pct_files_returned: f64,
    pub budget_fraction: Option<f64>,
    pub k: usize,
    pub beta: f64,
    pub median_recall_at_k: Option<f64>,
    pub median_precision_at_k: Option<f64>,
    pub median_fbeta_at_k: Option<f64>,
    /// Fraction of evaluated cases with at least one relevant file retrieved.
    pub percentage_found: Option<f64>,
    pub latency: LatencySummary,
    pub cases: Vec<CaseResult>,
}

/// Source languages making up at least a tenth of the source files, most common first.
pub fn primary_languages(graph: &KnowledgeGraph) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0;
    for n in graph.nodes_of_kind(NodeKind::File) {
        if category_for_path(&n.path) == FileCategory::Source {
            if let Some(l) = n.language.as_deref() {
                *counts.entry(l).or_default() += 1;
                total += 1;
            }
        }
    }
    let mut langs: Vec<(&str, usize)> = counts.into_iter().collect();
    langs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    langs
        .iter()
        .enumerate()
        .filter(|(i, (_, c))| *i == 0 || *c * 10 >= total)
        .map(|(_, (l, _))| l.to_string())
        .collect()
}

fn run_case(graph: &KnowledgeGraph, case: &TestCase, template: &RetrievalRequest, providers: Providers<'_>, beta: f64) -> CaseResult {
    let mut req = template.clone();
    req.query_text = case.issue_text.clone();
    let started = Instant::now();
    let outcome = search_relevant(graph, &req, providers);
    let total_ms = started.elapsed().as_secs_f64() * 1e3;
    let mut result = CaseResult {
        issue_id: case.issue_id,
        pr_id: case.pr_id,
        retrieved: Vec::new(),
        ground_truth: case.ground_truth.iter().cloned().collect(),
        metrics: None,
        error: None,
        timings_ms: StageTimings::default(),
        total_ms,
    };
    match outcome {
        Ok(resp) => {
            result.retrieved = resp.results.into_iter().map(|r| r.path).collect();
            result.timings_ms = resp.diagnostics.timings_ms;
            match MetricRow::compute(&result.retrieved, &case.ground_truth, req.k, beta) {
                Ok(m) => result.metrics = Some(m),
                Err(e) => result.error = Some(e.to_string()),
            }
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result
}

fn median_of(rows: &[&MetricRow], f: impl Fn(&MetricRow) -> f64) -> Option<f64> {
    median(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
}

/// Runs every case through the retrieval pipeline and aggregates medians.
/// Failed cases are counted but excluded from the medians.
pub fn run_eval(
    graph: &KnowledgeGraph,
    cases: &[TestCase],
    template: &RetrievalRequest,
    providers: Providers<'_>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no test cases".into()));
    }
    if !(options.beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be > 0, got {}", options.beta)));
    }
    let mut probe = template.clone();
    if probe.query_text.trim().is_empty() {
        probe.query_text = "probe".into();
    }
    probe.validate()?;
    if !graph.nodes().any(|n| n.search_embedding().is_some()) {
        return Err(Error::NotEnriched);
    }

    let beta = options.beta;
    let results: Vec<CaseResult> = if options.parallel {
        cases.par_iter().map(|c| run_case(graph, c, template, providers, beta)).collect()
    } else {
        cases.iter().map(|c| run_case(graph, c, template, providers, beta)).collect()
    };

    let ok: Vec<&CaseResult> = results.iter().filter(|r| r.metrics.is_some()).collect();
    let rows: Vec<&MetricRow> = ok.iter().filter_map(|r| r.metrics.as_ref()).collect();
    let files_total = graph.file_paths().count();
    let stage = |f: fn(&StageTimings) -> f64| median(&ok.iter().map(|r| f(&r.timings_ms)).collect::<Vec<_>>()).unwrap_or(0.0);
    let latency = LatencySummary {
        build_seconds: options.build_seconds,
        median_query_seconds: median(&ok.iter().map(|r| r.total_ms / 1e3).collect::<Vec<_>>()),
        median_stage_ms: StageTimings {
            preprocess: stage(|t| t.preprocess),
            semantic: stage(|t| t.semantic),
            traversal: stage(|t| t.traversal),
            discovery: stage(|t| t.discovery),
        },
        with_llm: template.mode != PreprocessMode::None,
    };
    Ok(EvalReport {
        repository: options.repository.clone(),
        languages: primary_languages(graph),
        test_cases: cases.len(),
        failed_cases: results.len() - ok.len(),
        files_total,
        files_returned: template.k,
        pct_files_returned: if files_total == 0 {
            0.0
        } else {
            100.0 * template.k.min(files_total) as f64 / files_total as f64
        },
        budget_fraction: template.budget_fraction,
        k: template.k,
        beta,
        median_recall_at_k: median_of(&rows, |m| m.recall_at_k),
        median_precision_at_k: median_of(&rows, |m| m.precision_at_k),
        median_fbeta_at_k: median_of(&rows, |m| m.fbeta_at_k),
        percentage_found: (!rows.is_empty()).then(|| rows.iter().filter(|m| m.found).count() as f64 / rows.len() as f64),
        latency,
        cases: results,
    })
}

/// Up to three decimals with trailing zeros dropped.
pub fn format_value(v: Option<f64>) -> String {
    match v {
        None => "n/a".into(),
        Some(v) => {
            let s = format!("{v:.3}");
            let s = s.trim_end_matches('0').trim_end_matches('.');
            if s == "-0" { "0".into() } else { s.to_string() }
        }
    }
}

fn format_pct(v: f64) -> String {
    format!("{v:.1}%")
}

pub fn table_header(k: usize) -> Vec<String> {
    [
        "Repository".to_string(),
        "Languages".into(),
        "Test cases".into(),
        "Files total".into(),
        "Files returned".into(),
        "% Files returned".into(),
        format!("Median Recall@{k}"),
        format!("Median Precision@{k}"),
        format!("Median Fβ@{k}"),
    ]
    .into()
}

pub fn table_row(r: &EvalReport) -> Vec<String> {
    vec![
        r.repository.clone(),
        r.languages.join(", "),
        r.test_cases.to_string(),
        r.files_total.to_string(),
        r.files_returned.to_string(),
        format_pct(r.pct_files_returned),
        format_value(r.median_recall_at_k),
        format_value(r.median_precision_at_k),
        format_value(r.median_fbeta_at_k),
    ]
}

fn render(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Tab-separated per-repository results. The header uses the first report's k.
pub fn render_results_table(reports: &[EvalReport]) -> String {
    let k = reports.first().map_or(0, |r| r.k);
    let mut rows = vec![table_header(k)];
    rows.extend(reports.iter().map(table_row));
    render(&rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub repository: String,
    pub languages: Vec<String>,
    pub nodes_total: usize,
    pub relationships_total: usize,
    pub build_seconds: Option<f64>,
    pub query_with_llm_seconds: Option<f64>,
    pub query_without_llm_seconds: Option<f64>,
}

impl LatencyRow {
    pub fn new(graph: &KnowledgeGraph, repository: impl Into<String>) -> Self {
        Self {
            repository: repository.into(),
            languages: primary_languages(graph),
            nodes_total: graph.nodes().count(),
            relationships_total: graph.edges().count(),
            build_seconds: None,
            query_with_llm_seconds: None,
            query_without_llm_seconds: None,
        }
    }

    /// Fills the query column matching the report's preprocessing mode.
    pub fn absorb(&mut self, report: &EvalReport) {
        if report.latency.build_seconds.is_some() {
            self.build_seconds = report.latency.build_seconds;
        }
        let q = report.latency.median_query_seconds;
        if report.latency.with_llm {
            self.query_with_llm_seconds = q;
        } else {
            self.query_without_llm_seconds = q;
        }
    }
}

pub const LATENCY_HEADER: [&str; 7] = [
    "Repository",
    "Languages",
    "Nodes total",
    "Relationships total",
    "Graph creation time with cache, s",
    "Query time with LLM, s",
    "Query time without LLM, s",
];

fn format_secs(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |s| format!("{s:.2}"))
}

pub fn render_latency_table(rows: &[LatencyRow]) -> String {
    let mut out = vec![LATENCY_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for r in rows {
        out.push(vec![
            r.repository.clone(),
            r.languages.join(", "),
            r.nodes_total.to_string(),
            r.relationships_total.to_string(),
            format_secs(r.build_seconds),
            format_secs(r.query_with_llm_seconds),
            format_secs(r.query_without_llm_seconds),
        ]);
    }
    render(&out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    pub request: RetrievalRequest,
}

impl NamedConfig {
    pub fn new(name: impl Into<String>, request: RetrievalRequest) -> Self {
        Self { name: name.into(), request }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseDelta {
    pub issue_id: u64,
    pub recall_at_k: f64,
    pub precision_at_k: f64,
    pub fbeta_at_k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedianDeltas {
    pub recall_at_k: Option<f64>,
    pub precision_at_k: Option<f64>,
    pub fbeta_at_k: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    pub a_name: String,
    pub b_name: String,
    pub a: EvalReport,
    pub b: EvalReport,
    /// b minus a, for cases that succeeded under both configurations.
    pub deltas: Vec<CaseDelta>,
    /// Median under b minus median under a.
    pub median_deltas: MedianDeltas,
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(b? - a?)
}

pub fn ab_compare(
    graph: &KnowledgeGraph,
    cases: &[TestCase],
    a: &NamedConfig,
    b: &NamedConfig,
    providers: Providers<'_>,
    options: &EvalOptions,
) -> Result<AbReport> {
    let ra = run_eval(graph, cases, &a.request, providers, options)?;
    let rb = run_eval(graph, cases, &b.request, providers, options)?;
    let deltas = ra
        .cases
        .iter()
        .zip(&rb.cases)
        .filter_map(|(x, y)| {
            let (mx, my) = (x.metrics.as_ref()?, y.metrics.as_ref()?);
            Some(CaseDelta {
                issue_id: x.issue_id,
                recall_at_k: my.recall_at_k - mx.recall_at_k,
                precision_at_k: my.precision_at_k - mx.precision_at_k,
                fbeta_at_k: my.fbeta_at_k - mx.fbeta_at_k,
            })
        })
        .collect();
    let median_deltas = MedianDeltas {
        recall_at_k: diff(ra.median_recall_at_k, rb.median_recall_at_k),
        precision_at_k: diff(ra.median_precision_at_k, rb.median_precision_at_k),
        fbeta_at_k: diff(ra.median_fbeta_at_k, rb.median_fbeta_at_k),
    };
    Ok(AbReport {
        a_name: a.name.clone(),
        b_name: b.name.clone(),
        a: ra,
        b: rb,
        deltas,
        median_deltas,
    })
}

/// Share of the repository returned: the candidate budget when one is set,
/// otherwise the k-long list.
fn share_returned(r: &EvalReport) -> f64 {
    r.budget_fraction.map_or(r.pct_files_returned, |b| 100.0 * b)
}

pub const AB_ROWS: [&str; 4] = ["Recall", "Precision", "Fβ", "Percentage Found, N %"];

/// Two-column comparison: one row per median metric plus the share returned.
pub fn render_ab_table(report: &AbReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Algorithm\t{}\t{}", report.a_name, report.b_name);
    let pairs = [
        (report.a.median_recall_at_k, report.b.median_recall_at_k),
        (report.a.median_precision_at_k, report.b.median_precision_at_k),
        (report.a.median_fbeta_at_k, report.b.median_fbeta_at_k),
    ];
    for (name, (x, y)) in AB_ROWS.iter().zip(pairs) {
        let _ = writeln!(out, "{name}\t{}\t{}", format_value(x), format_value(y));
    }
    let _ = writeln!(
        out,
        "{}\t{}\t{}",
        AB_ROWS[3],
        format_pct(share_returned(&report.a)),
        format_pct(share_returned(&report.b))
    );
    out
}
