//! File selection: ignore files, size cap and generated lockfiles.

use std::path::{Path, PathBuf};

use ignore::gitignore::{Gitignore, GitignoreBuilder};
use ignore::Match;
use serde::{Deserialize, Serialize};

use super::checkout::{Checkout, FileEntry};
use crate::Result;

pub const DEFAULT_MAX_FILE_SIZE: u64 = 1024 * 1024;

pub const DEFAULT_LOCKFILES: &[&str] = &[
    "poetry.lock",
    "Cargo.lock",
    "package-lock.json",
    "yarn.lock",
    "pnpm-lock.yaml",
    "Pipfile.lock",
    "composer.lock",
    "Gemfile.lock",
    "go.sum",
    "uv.lock",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestFilter {
    pub max_file_size: u64,
    pub lockfiles: Vec<String>,
    /// Extra gitignore-style patterns applied at the repository root.
    pub exclude: Vec<String>,
    pub honor_ignore_files: bool,
}

impl Default for IngestFilter {
    fn default() -> Self {
        Self {
            max_file_size: DEFAULT_MAX_FILE_SIZE,
            lockfiles: DEFAULT_LOCKFILES.iter().map(|s| s.to_string()).collect(),
            exclude: Vec::new(),
            honor_ignore_files: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Selection {
    pub files: Vec<FileEntry>,
    pub skipped: Vec<SkippedFile>,
}

// Matchers are rooted under a virtual prefix so that repository-relative
// paths never collide with the process working directory.
const VROOT: &str = "/__repo__";

fn vpath(rel: &str) -> PathBuf {
    Path::new(VROOT).join(rel)
}

impl IngestFilter {
    pub fn select(&self, checkout: &dyn Checkout) -> Result<Selection> {
        let entries = checkout.list_files()?;
        let mut matchers: Vec<(String, Gitignore)> = Vec::new();
        if !self.exclude.is_empty() {
            let mut b = GitignoreBuilder::new(VROOT);
            for pat in &self.exclude {
                b.add_line(None, pat)
                    .map_err(|e| crate::Error::InvalidArgument(format!("bad exclude pattern `{pat}`: {e}")))?;
            }
            if let Ok(gi) = b.build() {
                matchers.push((String::new(), gi));
            }
        }
        if self.honor_ignore_files {
            let ignore_files: Vec<String> = entries
                .iter()
                .filter(|e| e.path == ".gitignore" || e.path.ends_with("/.gitignore"))
                .map(|e| e.path.clone())
                .collect();
            for (path, content) in checkout.read_many(&ignore_files) {
                let Ok(content) = content else { continue };
                let dir = path.strip_suffix(".gitignore").unwrap_or("").trim_end_matches('/');
                let mut b = GitignoreBuilder::new(vpath(dir));
                for line in String::from_utf8_lossy(&content).lines() {
                    // Invalid lines are skipped, as git does.
                    let _ = b.add_line(None, line);
                }
                if let Ok(gi) = b.build() {
                    matchers.push((dir.to_string(), gi));
                }
            }
            // Shallow matchers first so deeper files override them.
            matchers.sort_by_key(|(dir, _)| if dir.is_empty() { 0 } else { dir.matches('/').count() + 1 });
        }

        let mut selection = Selection::default();
        for entry in entries {
            if entry.path.split('/').any(|seg| seg == ".git") {
                continue;
            }
            let name = entry.path.rsplit('/').next().unwrap_or(&entry.path);
            if self.lockfiles.iter().any(|l| l == name) {
                continue;
            }
            if is_ignored(&matchers, &entry.path) {
                continue;
            }
            if entry.size > self.max_file_size {
                selection.skipped.push(SkippedFile {
                    path: entry.path,
                    reason: format!("larger than {} bytes", self.max_file_size),
                });
                continue;
            }
            selection.files.push(entry);
        }
        Ok(selection)
    }
}

fn is_ignored(matchers: &[(String, Gitignore)], path: &str) -> bool {
    let full = vpath(path);
    let mut ignored = false;
    for (dir, gi) in matchers {
        let applies = dir.is_empty() || path.starts_with(&format!("{dir}/"));
        if !applies {
            continue;
        }
        match gi.matched_path_or_any_parents(&full, false) {
            Match::Ignore(_) => ignored = true,
            Match::Whitelist(_) => ignored = false,
            Match::None => {}
        }
    }
    ignored
}
