//! Code-hosting APIs that supply merged pull requests and issues.

use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequest {
    pub number: u64,
    pub title: String,
    #[serde(default)]
    pub body: Option<String>,
    #[serde(default)]
    pub merged_at: Option<DateTime<Utc>>,
    pub base_branch: String,
    #[serde(default)]
    pub base_sha: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub number: u64,
    pub title: String,
    #[serde(default)]
    pub body: Option<String>,
    #[serde(default)]
    pub created_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub is_pull_request: bool,
}

pub trait HostClient: Send + Sync {
    /// Pull requests into `branch` merged at or after `since`.
    fn merged_pulls(&self, repo: &str, branch: &str, since: DateTime<Utc>) -> Result<Vec<PullRequest>>;
    fn pull_files(&self, repo: &str, number: u64) -> Result<Vec<String>>;
    fn issue(&self, repo: &str, number: u64) -> Result<Issue>;
}

/// Recorded host responses for offline replay.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureData {
    pub pulls: Vec<PullRequest>,
    #[serde(default)]
    pub files: std::collections::BTreeMap<u64, Vec<String>>,
    #[serde(default)]
    pub issues: Vec<Issue>,
}

#[derive(Clone, Debug, Default)]
pub struct FixtureHost {
    pub data: FixtureData,
}

impl FixtureHost {
    pub fn new(data: FixtureData) -> Self {
        Self { data }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(serde_json::from_str(&std::fs::read_to_string(path)?)?))
    }
}

impl HostClient for FixtureHost {
    fn merged_pulls(&self, _: &str, branch: &str, since: DateTime<Utc>) -> Result<Vec<PullRequest>> {
        Ok(self
            .data
            .pulls
            .iter()
            .filter(|p| p.base_branch == branch && p.merged_at.is_some_and(|m| m >= since))
            .cloned()
            .collect())
    }

    fn pull_files(&self, _: &str, number: u64) -> Result<Vec<String>> {
        self.data
            .files
            .get(&number)
            .cloned()
            .ok_or_else(|| Error::Provider(format!("fixture has no files for pull request #{number}")))
    }

    fn issue(&self, _: &str, number: u64) -> Result<Issue> {
        self.data
            .issues
            .iter()
            .find(|i| i.number == number)
            .cloned()
            .ok_or_else(|| Error::Provider(format!("fixture has no issue #{number}")))
    }
}

/// Passes calls through to `inner` and keeps every successful answer.
pub struct RecordingHost<'a> {
    inner: &'a dyn HostClient,
    data: Mutex<FixtureData>,
}

impl<'a> RecordingHost<'a> {
    pub fn new(inner: &'a dyn HostClient) -> Self {
        Self {
            inner,
            data: Mutex::new(FixtureData::default()),
        }
    }

    pub fn recorded(&self) -> FixtureData {
        self.data.lock().expect("recording lock").clone()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.recorded())?)?;
        Ok(())
    }
}

impl HostClient for RecordingHost<'_> {
    fn merged_pulls(&self, repo: &str, branch: &str, since: DateTime<Utc>) -> Result<Vec<PullRequest>> {
        let pulls = self.inner.merged_pulls(repo, branch, since)?;
        self.data.lock().expect("recording lock").pulls.extend(pulls.iter().cloned());
        Ok(pulls)
    }

    fn pull_files(&self, repo: &str, number: u64) -> Result<Vec<String>> {
        let files = self.inner.pull_files(repo, number)?;
        self.data.lock().expect("recording lock").files.insert(number, files.clone());
        Ok(files)
    }

    fn issue(&self, repo: &str, number: u64) -> Result<Issue> {
        let issue = self.inner.issue(repo, number)?;
        self.data.lock().expect("recording lock").issues.push(issue.clone());
        Ok(issue)
    }
}

/// GitHub REST v3 client.
#[derive(Clone, Debug)]
pub struct GitHubClient {
    api_base: String,
    token: Option<String>,
    agent: ureq::Agent,
    max_pages: usize,
}

const PER_PAGE: usize = 100;

impl GitHubClient {
    pub fn new(api_base: impl Into<String>, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self {
            api_base: api_base.into().trim_end_matches('/').to_string(),
            token,
            agent,
            max_pages: 20,
        }
    }

    pub fn public() -> Self {
        Self::new("https://api.github.com", std::env::var("GITHUB_TOKEN").ok())
    }

    pub fn with_max_pages(mut self, pages: usize) -> Self {
        self.max_pages = pages.max(1);
        self
    }

    fn get(&self, route: &str) -> Result<Value> {
        let url = format!("{}{route}", self.api_base);
        let mut req = self
            .agent
            .get(&url)
            .header("Accept", "application/vnd.github+json")
            .header("User-Agent", "repograph");
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.call().map_err(|e| Error::Provider(format!("GET {url}: {e}")))?;
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| Error::Provider(format!("GET {url}: {e}")))
    }

    fn pages(&self, route: &str, mut keep_going: impl FnMut(&[Value]) -> bool) -> Result<Vec<Value>> {
        let sep = if route.contains('?') { '&' } else { '?' };
        let mut out = Vec::new();
        for page in 1..=self.max_pages {
            let v = self.get(&format!("{route}{sep}per_page={PER_PAGE}&page={page}"))?;
            let items = v
                .as_array()
                .cloned()
                .ok_or_else(|| Error::Provider(format!("{route}: expected a JSON array")))?;
            let more = items.len() == PER_PAGE && keep_going(&items);
            out.extend(items);
            if !more {
                break;
            }
        }
        Ok(out)
    }
}

fn time(v: &Value) -> Option<DateTime<Utc>> {
    v.as_str().and_then(|s| DateTime::parse_from_rfc3339(s).ok()).map(|t| t.with_timezone(&Utc))
}

fn text(v: &Value) -> Option<String> {
    v.as_str().map(str::to_string)
}

impl HostClient for GitHubClient {
    fn merged_pulls(&self, repo: &str, branch: &str, since: DateTime<Utc>) -> Result<Vec<PullRequest>> {
        let route = format!("/repos/{repo}/pulls?state=closed&base={branch}&sort=updated&direction=desc");
        // Sorted by last update: once a page ends before `since`, later pages
        // cannot contain newer merges.
        let items = self.pages(&route, |page| page.last().and_then(|p| time(&p["updated_at"])).is_none_or(|t| t >= since))?;
        Ok(items
            .iter()
            .filter_map(|p| {
                let merged_at = time(&p["merged_at"])?;
                (merged_at >= since).then(|| PullRequest {
                    number: p["number"].as_u64().unwrap_or(0),
                    title: text(&p["title"]).unwrap_or_default(),
                    body: text(&p["body"]),
                    merged_at: Some(merged_at),
                    base_branch: text(&p["base"]["ref"]).unwrap_or_default(),
                    base_sha: text(&p["base"]["sha"]),
                })
            })
            .collect())
    }

    fn pull_files(&self, repo: &str, number: u64) -> Result<Vec<String>> {
        let items = self.pages(&format!("/repos/{repo}/pulls/{number}/files"), |_| true)?;
        Ok(items.iter().filter_map(|f| text(&f["filename"])).collect())
    }

    fn issue(&self, repo: &str, number: u64) -> Result<Issue> {
        let v = self.get(&format!("/repos/{repo}/issues/{number}"))?;
        Ok(Issue {
            number,
            title: text(&v["title"]).unwrap_or_default(),
            body: text(&v["body"]),
            created_at: time(&v["created_at"]),
            is_pull_request: v.get("pull_request").is_some_and(|p| !p.is_null()),
        })
    }
}
