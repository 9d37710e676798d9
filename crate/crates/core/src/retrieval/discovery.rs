use std::collections::{BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;

use super::preprocess::FileSuggester;
use crate::graph::{KnowledgeGraph, NodeId, NodeKind};

/// Single-component names matching more files than this are ignored.
pub const BARE_NAME_CAP: usize = 3;
/// Largest candidate list sent to a suggester.
pub const MAX_SUGGESTER_CANDIDATES: usize = 2000;

static TRACEBACK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"File "([^"]+)", line \d+"#).unwrap());
static PATH_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:[A-Za-z]:)?[\w~.\-]*(?:[/\\][\w.\-]+)*\.[A-Za-z0-9]+(?::\d+)*|[\w.\-]+(?:[/\\][\w.\-]+)+").unwrap());
static LINE_SUFFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?::\d+)+$").unwrap());

/// Canonical form of a path-like token; `None` when nothing usable is left.
pub fn normalize_token(raw: &str) -> Option<String> {
    let mut s = raw.trim().replace('\\', "/");
    s = LINE_SUFFIX.replace(&s, "").into_owned();
    let s = s.trim_matches(|c: char| matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '\'' | '"' | '`' | '(' | ')'));
    let mut s = s;
    while let Some(rest) = s.strip_prefix("./") {
        s = rest;
    }
    let s = s.trim_start_matches('/');
    (!s.is_empty() && s.chars().any(|c| c.is_alphanumeric())).then(|| s.to_string())
}

/// Path-like tokens and traceback file references in `text`, normalized.
pub fn extract_path_tokens(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for c in TRACEBACK.captures_iter(text) {
        out.extend(normalize_token(&c[1]));
    }
    for m in PATH_TOKEN.find_iter(text) {
        let tok = m.as_str();
        if tok.contains('/') || tok.contains('\\') || tok.contains('.') {
            out.extend(normalize_token(tok));
        }
    }
    out
}

/// Matches tokens against File paths by longest component suffix.
pub struct PathMatcher<'g> {
    by_basename: HashMap<&'g str, Vec<(NodeId, Vec<&'g str>)>>,
}

impl<'g> PathMatcher<'g> {
    pub fn new(graph: &'g KnowledgeGraph) -> Self {
        let mut by_basename: HashMap<&str, Vec<(NodeId, Vec<&str>)>> = HashMap::new();
        for node in graph.nodes_of_kind(NodeKind::File) {
            let parts: Vec<&str> = node.path.split('/').collect();
            if let Some(last) = parts.last() {
                by_basename.entry(*last).or_default().push((node.id, parts));
            }
        }
        Self { by_basename }
    }

    pub fn matches(&self, token: &str) -> BTreeSet<NodeId> {
        let parts: Vec<&str> = token.split('/').filter(|p| !p.is_empty()).collect();
        let Some(last) = parts.last() else {
            return BTreeSet::new();
        };
        let Some(candidates) = self.by_basename.get(last) else {
            return BTreeSet::new();
        };
        let common = |file: &[&str]| file.iter().rev().zip(parts.iter().rev()).take_while(|(a, b)| a == b).count();
        let best = candidates.iter().map(|(_, p)| common(p)).max().unwrap_or(0);
        let hits: BTreeSet<NodeId> = candidates
            .iter()
            .filter(|(_, p)| common(p) == best)
            .map(|(id, _)| *id)
            .collect();
        if best <= 1 && hits.len() > BARE_NAME_CAP {
            return BTreeSet::new();
        }
        hits
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiscoveryOutcome {
    pub files: BTreeSet<NodeId>,
    pub warnings: Vec<String>,
}

/// Files the query mentions, plus provider suggestions that exist in the
/// graph. A failing provider only produces a warning.
pub fn discover_mentioned_files(
    query: &str,
    graph: &KnowledgeGraph,
    suggester: Option<&dyn FileSuggester>,
) -> DiscoveryOutcome {
    let matcher = PathMatcher::new(graph);
    let mut out = DiscoveryOutcome::default();
    for tok in extract_path_tokens(query) {
        out.files.extend(matcher.matches(&tok));
    }
    if let Some(s) = suggester {
        let candidates: Vec<String> = graph.file_paths().take(MAX_SUGGESTER_CANDIDATES).map(str::to_string).collect();
        match s.suggest(query, &candidates) {
            Ok(paths) => {
                for p in paths {
                    if let Some(id) = normalize_token(&p)
                        .and_then(|p| graph.node_by_path(&p))
                        .filter(|n| n.kind == NodeKind::File)
                        .map(|n| n.id)
                    {
                        out.files.insert(id);
                    }
                }
            }
            Err(e) => out.warnings.push(format!("discovery: {e}; using rule-based matches only")),
        }
    }
    out
}
