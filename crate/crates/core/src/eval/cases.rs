use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::host::HostClient;
use crate::lang::is_source_path;
use crate::{Error, Result};

/// One issue with the files its fixing pull request modified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub repo: String,
    /// Revision the retrieval runs against (the pull request's base).
    pub revision: String,
    pub issue_id: u64,
    pub issue_text: String,
    pub pr_id: u64,
    pub ground_truth: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
}

/// Repository-relative form with forward slashes and no `./` prefix.
pub fn normalize_path(path: &str) -> Option<String> {
    let p = path.trim().replace('\\', "/");
    let parts: Vec<&str> = p.split('/').filter(|s| !s.is_empty() && *s != ".").collect();
    if parts.is_empty() || parts.contains(&"..") {
        return None;
    }
    Some(parts.join("/"))
}

impl TestCase {
    pub fn validate(&self) -> Result<()> {
        if self.ground_truth.is_empty() {
            return Err(Error::InvalidArgument(format!("issue {}: empty ground truth", self.issue_id)));
        }
        for p in &self.ground_truth {
            if normalize_path(p).as_deref() != Some(p.as_str()) {
                return Err(Error::InvalidArgument(format!("issue {}: path `{p}` is not normalized", self.issue_id)));
            }
        }
        Ok(())
    }
}

pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<TestCase>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let case: TestCase = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidArgument(format!("test case line {}: {e}", i + 1)))?;
        case.validate()?;
        out.push(case);
    }
    Ok(out)
}

pub fn write_jsonl(mut writer: impl Write, cases: &[TestCase]) -> Result<()> {
    for c in cases {
        serde_json::to_writer(&mut writer, c)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_cases(path: &Path) -> Result<Vec<TestCase>> {
    read_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_cases(path: &Path, cases: &[TestCase]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_jsonl(&mut f, cases)?;
    f.flush()?;
    Ok(())
}

static CLOSING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:close[sd]?|fix(?:e[sd])?|resolve[sd]?):?\s+(?:https?://github\.com/([\w.-]+/[\w.-]+)/issues/|([\w.-]+/[\w.-]+)#|#)(\d+)\b",
    )
    .unwrap()
});

/// Issue numbers of `repo` ("owner/name") closed by keywords in `text`.
pub fn closing_issue_refs(text: &str, repo: &str) -> BTreeSet<u64> {
    CLOSING
        .captures_iter(text)
        .filter(|c| {
            c.get(1)
                .or(c.get(2))
                .is_none_or(|r| r.as_str().eq_ignore_ascii_case(repo))
        })
        .filter_map(|c| c[3].parse().ok())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPull {
    pub pr: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    pub cases: Vec<TestCase>,
    pub skipped: Vec<SkippedPull>,
    pub errors: Vec<String>,
}

/// Test cases from pull requests merged into `branch` at or after `cutoff`
/// that close exactly one issue of the same repository and touch at least
/// one source file. Host failures are logged and generation continues.
pub fn generate_test_cases(repo: &str, branch: &str, cutoff: DateTime<Utc>, host: &dyn HostClient) -> Generation {
    let mut out = Generation::default();
    let mut pulls = match host.merged_pulls(repo, branch, cutoff) {
        Ok(p) => p,
        Err(e) => {
            out.errors.push(format!("list pull requests: {e}"));
            return out;
        }
    };
    pulls.sort_by_key(|p| p.number);
    for pr in pulls {
        let skip = |out: &mut Generation, reason: String| out.skipped.push(SkippedPull { pr: pr.number, reason });
        if pr.merged_at.is_none_or(|m| m < cutoff) || pr.base_branch != branch {
            continue;
        }
        let refs = closing_issue_refs(pr.body.as_deref().unwrap_or(""), repo);
        if refs.len() != 1 {
            skip(&mut out, format!("closes {} issues", refs.len()));
            continue;
        }
        let issue_id = *refs.iter().next().expect("one ref");
        let files = match host.pull_files(repo, pr.number) {
            Ok(f) => f,
            Err(e) => {
                out.errors.push(format!("files of #{}: {e}", pr.number));
                continue;
            }
        };
        let ground_truth: BTreeSet<String> = files.iter().filter_map(|f| normalize_path(f)).collect();
        if !ground_truth.iter().any(|p| is_source_path(p)) {
            skip(&mut out, "no source files modified".into());
            continue;
        }
        let issue = match host.issue(repo, issue_id) {
            Ok(i) => i,
            Err(e) => {
                out.errors.push(format!("issue #{issue_id}: {e}"));
                continue;
            }
        };
        if issue.is_pull_request {
            skip(&mut out, format!("#{issue_id} is a pull request"));
            continue;
        }
        let body = issue.body.as_deref().unwrap_or("").trim();
        out.cases.push(TestCase {
            repo: repo.to_string(),
            revision: pr.base_sha.clone().unwrap_or_else(|| branch.to_string()),
            issue_id,
            issue_text: if body.is_empty() {
                issue.title.clone()
            } else {
                format!("{}\n\n{body}", issue.title)
            },
            pr_id: pr.number,
            ground_truth,
            created_at: issue.created_at,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closing_keywords() {
        let r = "python-poetry/poetry";
        assert_eq!(closing_issue_refs("Fixes #10429", r), [10429].into());
        assert_eq!(closing_issue_refs("closes: #1, resolved #2", r), [1, 2].into());
        assert_eq!(closing_issue_refs("Resolves python-poetry/poetry#7", r), [7].into());
        assert_eq!(closing_issue_refs("fix https://github.com/python-poetry/poetry/issues/9", r), [9].into());
        assert!(closing_issue_refs("fixes other/repo#3", r).is_empty());
        assert!(closing_issue_refs("related to #4, see #5", r).is_empty());
        assert!(closing_issue_refs("prefix#6", r).is_empty());
    }

    #[test]
    fn path_normalization() {
        assert_eq!(normalize_path("./src\\a.py").as_deref(), Some("src/a.py"));
        assert_eq!(normalize_path("/a//b.py").as_deref(), Some("a/b.py"));
        assert_eq!(normalize_path("../x"), None);
    }
}
