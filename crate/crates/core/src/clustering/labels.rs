use std::collections::BTreeMap;

use super::{ClusterAssignment, MISC_CLUSTER};
use crate::enrich::prompt::cluster_label_prompt;
use crate::enrich::{SummarizerProvider, SummaryRequest};
use crate::graph::{KnowledgeGraph, NodeId, NodeKind};

fn file_name(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

/// Longest common directory of the members; a lone member is named after
/// its file; with no common directory, the most frequent file-name token.
pub fn stub_label(paths: &[&str]) -> Option<String> {
    match paths {
        [] => None,
        [one] => Some(file_name(one).to_string()),
        _ => {
            let dirs: Vec<Vec<&str>> = paths
                .iter()
                .map(|p| {
                    let mut parts: Vec<&str> = p.split('/').collect();
                    parts.pop();
                    parts
                })
                .collect();
            let mut common = dirs[0].len();
            for d in &dirs[1..] {
                common = common.min(d.iter().zip(&dirs[0]).take_while(|(a, b)| a == b).count());
            }
            if common > 0 {
                return Some(dirs[0][..common].join("/"));
            }
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for p in paths {
                let stem = file_name(p).split('.').next().unwrap_or("");
                for tok in stem.split(|c: char| !c.is_alphanumeric()).filter(|t| t.len() > 1) {
                    *counts.entry(tok.to_lowercase()).or_default() += 1;
                }
            }
            let max = counts.values().copied().max()?;
            counts.into_iter().find(|(_, c)| *c == max).map(|(t, _)| t)
        }
    }
}

/// Labels every cluster. The misc cluster is always "misc"; others come from
/// the summarizer when given, falling back to [`stub_label`].
pub fn label_clusters(
    assignment: &ClusterAssignment,
    graph: &KnowledgeGraph,
    summarizer: Option<&dyn SummarizerProvider>,
) -> ClusterAssignment {
    let mut out = assignment.clone();
    out.labels.clear();
    for (id, members) in assignment.members() {
        if id == MISC_CLUSTER {
            out.labels.insert(id, Some("misc".into()));
            continue;
        }
        let mut paths: Vec<&str> = members.iter().filter_map(|m| graph.node(*m)).map(|n| n.path.as_str()).collect();
        paths.sort_unstable();
        let fallback = stub_label(&paths);
        let label = match summarizer {
            None => fallback,
            Some(s) => match summarize(s, graph, id, &members, fallback.as_deref()) {
                Ok(l) if !l.trim().is_empty() => Some(l.trim().to_string()),
                Ok(_) => fallback,
                Err(e) => {
                    out.warnings.push(format!("label cluster {id}: {e}; using path label"));
                    fallback
                }
            },
        };
        out.labels.insert(id, label);
    }
    out
}

fn summarize(
    s: &dyn SummarizerProvider,
    graph: &KnowledgeGraph,
    id: u32,
    members: &[NodeId],
    prefix: Option<&str>,
) -> crate::Result<String> {
    let lines: Vec<String> = members
        .iter()
        .filter_map(|m| graph.node(*m))
        .map(|n| match &n.description {
            Some(d) => format!("{}: {d}", n.path),
            None => n.path.clone(),
        })
        .collect();
    s.summarize(&SummaryRequest {
        kind: NodeKind::Folder,
        name: format!("cluster {id}"),
        path: prefix.unwrap_or_default().to_string(),
        docstring: None,
        content: Some(lines.join("\n")),
        context: cluster_label_prompt(&lines),
    })
}
