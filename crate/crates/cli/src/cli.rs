use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use repograph_core::clustering::{ClusterMethod, ClusterOptions};
use repograph_core::eval::{
    ab_compare, generate_test_cases, load_cases, render_ab_table, render_results_table, run_eval, save_cases, EvalOptions, FixtureHost,
    GitHubClient, HostClient, NamedConfig, RecordingHost,
};
use repograph_core::graph::snapshot::EmbeddingEncoding;
use repograph_core::retrieval::{PreprocessMode, RetrievalRequest, TraversalMode};
use repograph_core::KnowledgeGraph;
use serde::Serialize;

use crate::api::{self, App};
use crate::audit::AuditLog;
use crate::config::ServiceConfig;
use crate::ops;
use crate::providers::ProviderSet;
use crate::store::GraphStore;

#[derive(Debug, Parser)]
#[command(name = "repograph", version, about = "Repository knowledge graphs for issue-driven file retrieval")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true, env = "REPOGRAPH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// More logging on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and enrich a graph from a repository checkout.
    Build(BuildArgs),
    /// Move a graph snapshot to a newer commit.
    Update(UpdateArgs),
    /// Rank files for an issue.
    Search(SearchArgs),
    /// Group files into clusters.
    Cluster(ClusterArgs),
    /// Evaluate retrieval on issue/PR test cases.
    Eval(EvalArgs),
    /// Generate issue/PR test cases from a code host.
    Cases(CasesArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Print node and relation counts of a snapshot.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub repo: PathBuf,
    #[arg(long, default_value = "HEAD")]
    pub rev: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip summaries and embeddings.
    #[arg(long)]
    pub no_enrich: bool,
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Git repository; defaults to the one the graph was built from.
    #[arg(long)]
    pub repo: Option<PathBuf>,
    /// Expected current revision; defaults to the graph's.
    #[arg(long)]
    pub from: Option<String>,
    #[arg(long)]
    pub to: String,
    /// Output snapshot; defaults to overwriting `--graph`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_enrich: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraversalArg {
    Off,
    Default,
}

#[derive(Debug, Clone, Args)]
pub struct RetrievalArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// none | llm | concat-llm | selective-llm
    #[arg(long)]
    pub mode: Option<String>,
    /// Disable every LLM stage (forces mode none).
    #[arg(long)]
    pub no_llm: bool,
    /// Semantic candidates as a fraction of all files, in (0, 1].
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long, value_enum)]
    pub traversal: Option<TraversalArg>,
    #[arg(long)]
    pub no_discovery: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, conflicts_with = "query_file", required_unless_present = "query_file")]
    pub query: Option<String>,
    #[arg(long)]
    pub query_file: Option<PathBuf>,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// semantic | louvain | label-propagation
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub min_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AbToggle {
    Discovery,
    Traversal,
    Llm,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Test cases, one JSON object per line.
    #[arg(long)]
    pub cases: PathBuf,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    #[arg(long, default_value_t = repograph_core::eval::DEFAULT_BETA)]
    pub beta: f64,
    /// Compare the configuration without and with one stage.
    #[arg(long, value_enum)]
    pub ab: Option<AbToggle>,
    /// Repository name for the report; defaults to the graph's.
    #[arg(long)]
    pub name: Option<String>,
    /// Write the full report (with per-case rows) here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CasesArgs {
    /// owner/name
    #[arg(long)]
    pub repo: String,
    #[arg(long, default_value = "main")]
    pub branch: String,
    /// RFC 3339 timestamp or YYYY-MM-DD.
    #[arg(long)]
    pub since: String,
    /// Replay a recorded host fixture instead of calling the API.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Save every host response to this fixture file.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long, default_value = "https://api.github.com", env = "GITHUB_API_URL")]
    pub api_base: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Snapshot directory; overrides the configuration.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Extra snapshots to host.
    #[arg(long)]
    pub graph: Vec<PathBuf>,
    #[arg(long)]
    pub audit_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub graph: PathBuf,
}

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Operational(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Operational(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Operational(_) => 2,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T = ()> = Result<T, CliError>;

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce() -> String) -> CliResult {
    let mut out = std::io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
    } else {
        write!(out, "{}", human())?;
    }
    Ok(())
}

fn load_graph(path: &Path) -> CliResult<KnowledgeGraph> {
    KnowledgeGraph::load_snapshot(path).with_context(|| format!("loading {}", path.display())).map_err(CliError::Operational)
}

fn retrieval_request(cfg: &ServiceConfig, args: &RetrievalArgs, query: String) -> CliResult<RetrievalRequest> {
    let mut r = cfg.request_template();
    r.query_text = query;
    if let Some(k) = args.k {
        r.k = k;
    }
    if let Some(m) = &args.mode {
        r.mode = m.parse().map_err(|e: repograph_core::Error| usage(e.to_string()))?;
    }
    if args.no_llm {
        r.mode = PreprocessMode::None;
    }
    if args.budget.is_some() {
        r.budget_fraction = args.budget;
    }
    match args.traversal {
        Some(TraversalArg::Off) => r.traversal = TraversalMode::Off,
        Some(TraversalArg::Default) => r.traversal = TraversalMode::Default,
        None => {}
    }
    r.enable_discovery = !args.no_discovery;
    let mut probe = r.clone();
    if probe.query_text.trim().is_empty() {
        probe.query_text = "probe".into();
    }
    probe.validate().map_err(|e| usage(e.to_string()))?;
    Ok(r)
}

fn providers_for(cfg: &ServiceConfig, no_llm: bool) -> ProviderSet {
    let p = ProviderSet::from_config(cfg);
    if no_llm {
        p.without_llm()
    } else {
        p
    }
}

fn parse_since(s: &str) -> CliResult<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| usage(format!("--since `{s}` is neither RFC 3339 nor YYYY-MM-DD")))
}

pub fn run(cli: Cli) -> CliResult {
    let mut cfg = ServiceConfig::load(cli.config.as_deref()).map_err(|e| usage(format!("configuration: {e}")))?;
    let json = cli.json;
    match cli.command {
        Command::Build(a) => {
            if !a.repo.exists() {
                return Err(usage(format!("--repo {} does not exist", a.repo.display())));
            }
            let providers = ProviderSet::from_config(&cfg);
            let (graph, outcome) = ops::build(&a.repo, &a.rev, a.no_enrich, &providers, &cfg)?;
            graph.save_snapshot(&a.out, EmbeddingEncoding::Base64)?;
            let stats = graph.stats();
            let value = serde_json::json!({ "snapshot": a.out, "build": outcome, "stats": stats });
            emit(json, &value, || {
                format!(
                    "Built {} at {} in {:.2}s -> {}\n{}",
                    graph.meta.repo_url,
                    graph.meta.revision,
                    outcome.seconds,
                    a.out.display(),
                    stats.render()
                )
            })
        }
        Command::Update(a) => {
            let mut graph = load_graph(&a.graph)?;
            let repo = a.repo.clone().unwrap_or_else(|| PathBuf::from(&graph.meta.repo_url));
            let from = a.from.clone().unwrap_or_else(|| graph.meta.revision.clone());
            let providers = ProviderSet::from_config(&cfg);
            let outcome = ops::update(&mut graph, &repo, &from, &a.to, a.no_enrich, &providers, &cfg)?;
            let out = a.out.unwrap_or(a.graph);
            graph.save_snapshot(&out, EmbeddingEncoding::Base64)?;
            emit(json, &outcome, || {
                format!(
                    "Updated {} -> {}: {} added, {} modified, {} deleted in {:.2}s\n",
                    outcome.old_revision, outcome.new_revision, outcome.added, outcome.modified, outcome.deleted, outcome.seconds
                )
            })
        }
        Command::Search(a) => {
            let query = match (&a.query, &a.query_file) {
                (Some(q), _) => q.clone(),
                (None, Some(f)) => std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?,
                (None, None) => return Err(usage("give --query or --query-file")),
            };
            let req = retrieval_request(&cfg, &a.retrieval, query)?;
            if req.query_text.trim().is_empty() {
                return Err(usage("query must not be empty"));
            }
            let graph = load_graph(&a.graph)?;
            let providers = providers_for(&cfg, a.retrieval.no_llm);
            let out = ops::search(&graph, &req, &providers)?;
            for w in &out.diagnostics.stage_warnings {
                eprintln!("warning: {w}");
            }
            emit(json, &out, || {
                let mut s = format!("{:>4}  {:>7}  {:<60}  via\n", "rank", "score", "path");
                for r in &out.results {
                    let via: Vec<String> = r.provenance.iter().map(|p| format!("{p:?}").to_lowercase()).collect();
                    s.push_str(&format!("{:>4}  {:>7.4}  {:<60}  {}\n", r.rank, r.score, r.path, via.join(",")));
                }
                s
            })
        }
        Command::Cluster(a) => {
            let method = match &a.method {
                Some(m) => m.parse::<ClusterMethod>().map_err(|e| usage(e.to_string()))?,
                None => cfg.cluster_method,
            };
            let mut opts = ClusterOptions::new(method);
            opts.seed = a.seed.unwrap_or(cfg.cluster_seed);
            if let Some(r) = a.resolution {
                opts.resolution = r;
            }
            if let Some(m) = a.min_size {
                opts.min_size = m;
            }
            let graph = load_graph(&a.graph)?;
            let out = ops::clusters(&graph, &opts, &ProviderSet::from_config(&cfg))?;
            emit(json, &out, || {
                let mut s = String::new();
                for c in &out.report.clusters {
                    s.push_str(&format!("[{}] {} ({} files)\n", c.id, c.label.as_deref().unwrap_or("-"), c.files.len()));
                    for f in &c.files {
                        s.push_str(&format!("    {f}\n"));
                    }
                }
                s.push_str(&format!("labels: {}\n", out.label_source));
                s
            })
        }
        Command::Eval(a) => {
            if !(a.beta > 0.0) {
                return Err(usage("--beta must be > 0"));
            }
            let template = retrieval_request(&cfg, &a.retrieval, String::new())?;
            let graph = load_graph(&a.graph)?;
            let cases = load_cases(&a.cases).with_context(|| format!("loading {}", a.cases.display()))?;
            let providers = providers_for(&cfg, a.retrieval.no_llm);
            let embedder = providers.embedder(graph.embedding_dim());
            let p = providers.retrieval(embedder.as_ref());
            let mut options = EvalOptions::new(a.name.clone().unwrap_or_else(|| repo_label(&graph)));
            options.beta = a.beta;
            match a.ab {
                None => {
                    let report = run_eval(&graph, &cases, &template, p, &options)?;
                    if let Some(path) = &a.report {
                        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
                    }
                    emit(json, &report, || render_results_table(std::slice::from_ref(&report)))
                }
                Some(toggle) => {
                    let (mut without, mut with) = (template.clone(), template.clone());
                    let name = match toggle {
                        AbToggle::Discovery => {
                            without.enable_discovery = false;
                            with.enable_discovery = true;
                            "discovery"
                        }
                        AbToggle::Traversal => {
                            without.traversal = TraversalMode::Off;
                            with.traversal = TraversalMode::Default;
                            "traversal"
                        }
                        AbToggle::Llm => {
                            without.mode = PreprocessMode::None;
                            if with.mode == PreprocessMode::None {
                                with.mode = PreprocessMode::Llm;
                            }
                            "LLM preprocessing"
                        }
                    };
                    let ab = ab_compare(
                        &graph,
                        &cases,
                        &NamedConfig::new(format!("Without {name}"), without),
                        &NamedConfig::new(format!("With {name}"), with),
                        p,
                        &options,
                    )?;
                    if let Some(path) = &a.report {
                        std::fs::write(path, serde_json::to_string_pretty(&ab)?)?;
                    }
                    emit(json, &ab, || render_ab_table(&ab))
                }
            }
        }
        Command::Cases(a) => {
            let since = parse_since(&a.since)?;
            let github;
            let fixture;
            let host: &dyn HostClient = match &a.fixture {
                Some(p) => {
                    fixture = FixtureHost::load(p).with_context(|| format!("loading {}", p.display()))?;
                    &fixture
                }
                None => {
                    github = GitHubClient::new(a.api_base.clone(), std::env::var("GITHUB_TOKEN").ok());
                    &github
                }
            };
            let recorder = RecordingHost::new(host);
            let gen = generate_test_cases(&a.repo, &a.branch, since, &recorder);
            if let Some(p) = &a.record {
                recorder.save(p)?;
            }
            save_cases(&a.out, &gen.cases)?;
            for e in &gen.errors {
                eprintln!("warning: {e}");
            }
            emit(json, &gen, || {
                format!(
                    "{} test cases written to {} ({} pull requests skipped, {} errors)\n",
                    gen.cases.len(),
                    a.out.display(),
                    gen.skipped.len(),
                    gen.errors.len()
                )
            })
        }
        Command::Serve(a) => {
            if let Some(s) = a.store {
                cfg.store_dir = s;
            }
            if a.audit_log.is_some() {
                cfg.audit_log = a.audit_log;
            }
            let store = GraphStore::open(&cfg.store_dir)?;
            for g in &a.graph {
                store.insert(load_graph(g)?)?;
            }
            let audit = match &cfg.audit_log {
                Some(p) => AuditLog::open(p)?,
                None => AuditLog::in_memory(),
            };
            let app = Arc::new(App::new(cfg, store, audit));
            tokio::runtime::Runtime::new()?.block_on(api::serve(app, &a.addr))?;
            Ok(())
        }
        Command::Stats(a) => {
            let graph = load_graph(&a.graph)?;
            let stats = graph.stats();
            let value = serde_json::json!({
                "graph_id": graph.meta.graph_id,
                "revision": graph.meta.revision,
                "stats": stats,
            });
            emit(json, &value, || format!("{} @ {}\n{}", graph.meta.repo_url, graph.meta.revision, stats.render()))
        }
    }
}

fn repo_label(graph: &KnowledgeGraph) -> String {
    repograph_core::ingest::checkout::repo_name_from(&graph.meta.repo_url)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into()))
        .with_writer(std::io::stderr)
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Operational(err) => eprintln!("error: {err:#}"),
            }
            e.exit_code()
        }
    }
}
