//! Versioned prompt templates.

const SHARED: &str = include_str!("../../prompts/shared_instructions.txt");
const SUMMARIZE_V1: &str = include_str!("../../prompts/summarize_v1.txt");
const PREPROCESS_V1: &str = include_str!("../../prompts/preprocess_v1.txt");
const DISCOVERY_V1: &str = include_str!("../../prompts/discovery_v1.txt");
const CLUSTER_LABEL_V1: &str = include_str!("../../prompts/cluster_label_v1.txt");

pub const SUMMARIZE_VERSION: &str = "summarize_v1";
pub const PREPROCESS_VERSION: &str = "preprocess_v1";
pub const DISCOVERY_VERSION: &str = "discovery_v1";
pub const CLUSTER_LABEL_VERSION: &str = "cluster_label_v1";

/// Replaces `{{name}}` placeholders. Unknown placeholders are left as is.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.replace("{{shared}}", SHARED.trim_end());
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

pub fn summarize_prompt(kind: &str, name: &str, path: &str, repo: &str) -> String {
    render(SUMMARIZE_V1, &[("kind", kind), ("name", name), ("path", path), ("repo", repo)])
}

pub fn preprocess_prompt(issue: &str) -> String {
    render(PREPROCESS_V1, &[("issue", issue)])
}

pub fn discovery_prompt(issue: &str, candidates: &[String]) -> String {
    render(DISCOVERY_V1, &[("issue", issue), ("candidates", &candidates.join("\n"))])
}

pub fn cluster_label_prompt(members: &[String]) -> String {
    render(CLUSTER_LABEL_V1, &[("members", &members.join("\n"))])
}
