//! Read-only views of a repository at one revision.
//!
//! Git checkouts are read through plumbing commands (`ls-tree`, `cat-file`)
//! so the analyzed repository's working tree and index are never touched.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Repository location plus the revision to analyze.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoRef {
    pub url_or_path: String,
    pub revision: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileEntry {
    pub path: String,
    pub size: u64,
}

pub trait Checkout: Send + Sync {
    /// Resolved revision identifier (full commit hash for git).
    fn revision(&self) -> &str;

    fn repo_name(&self) -> String;

    /// Every regular file, sorted by path.
    fn list_files(&self) -> Result<Vec<FileEntry>>;

    fn read(&self, path: &str) -> Result<Vec<u8>>;

    /// Reads several files; failures are reported per path.
    fn read_many(&self, paths: &[String]) -> Vec<(String, Result<Vec<u8>>)> {
        paths.iter().map(|p| (p.clone(), self.read(p))).collect()
    }

    /// Timestamp recorded as `last_modified` for nodes created from `path`.
    fn timestamp(&self, path: &str) -> DateTime<Utc>;
}

fn run_git(repo: &Path, args: &[&str]) -> Result<Vec<u8>> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .output()
        .map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
    if !output.status.success() {
        return Err(Error::Git(format!(
            "git {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    Ok(output.stdout)
}

/// Resolves `revision` to a full commit hash.
pub fn resolve_revision(repo: &Path, revision: &str) -> Result<String> {
    let spec = format!("{revision}^{{commit}}");
    let out = run_git(repo, &["rev-parse", "--verify", "--quiet", &spec])
        .map_err(|_| Error::Revision(format!("cannot resolve revision `{revision}` in {}", repo.display())))?;
    Ok(String::from_utf8_lossy(&out).trim().to_string())
}

pub(crate) fn git(repo: &Path, args: &[&str]) -> Result<Vec<u8>> {
    run_git(repo, args)
}

#[derive(Clone, Debug)]
pub struct GitCheckout {
    repo: PathBuf,
    commit: String,
    committed_at: DateTime<Utc>,
    blobs: BTreeMap<String, (String, u64)>,
}

impl GitCheckout {
    pub fn open(repo: impl Into<PathBuf>, revision: &str) -> Result<Self> {
        let repo = repo.into();
        let commit = resolve_revision(&repo, revision)?;
        let ts = run_git(&repo, &["show", "-s", "--format=%ct", &commit])?;
        let secs: i64 = String::from_utf8_lossy(&ts)
            .trim()
            .parse()
            .map_err(|e| Error::Git(format!("bad commit timestamp: {e}")))?;
        let committed_at = DateTime::from_timestamp(secs, 0).unwrap_or(DateTime::UNIX_EPOCH);
        let listing = run_git(&repo, &["ls-tree", "-r", "-l", "-z", "--full-tree", &commit])?;
        let mut blobs = BTreeMap::new();
        for record in listing.split(|b| *b == 0).filter(|r| !r.is_empty()) {
            let record = String::from_utf8_lossy(record);
            let Some((meta, path)) = record.split_once('\t') else {
                continue;
            };
            let fields: Vec<&str> = meta.split_whitespace().collect();
            // mode type object size; symlinks (120000) and submodules are skipped
            if fields.len() != 4 || fields[1] != "blob" || fields[0] == "120000" {
                continue;
            }
            let size = fields[3].parse().unwrap_or(0);
            blobs.insert(path.to_string(), (fields[2].to_string(), size));
        }
        Ok(Self {
            repo,
            commit,
            committed_at,
            blobs,
        })
    }

    pub fn repo_path(&self) -> &Path {
        &self.repo
    }
}

impl Checkout for GitCheckout {
    fn revision(&self) -> &str {
        &self.commit
    }

    fn repo_name(&self) -> String {
        repo_name_from(&self.repo.to_string_lossy())
    }

    fn list_files(&self) -> Result<Vec<FileEntry>> {
        Ok(self
            .blobs
            .iter()
            .map(|(path, (_, size))| FileEntry {
                path: path.clone(),
                size: *size,
            })
            .collect())
    }

    fn read(&self, path: &str) -> Result<Vec<u8>> {
        let (oid, _) = self
            .blobs
            .get(path)
            .ok_or_else(|| Error::InvalidArgument(format!("`{path}` not in revision {}", self.commit)))?;
        run_git(&self.repo, &["cat-file", "blob", oid])
    }

    fn read_many(&self, paths: &[String]) -> Vec<(String, Result<Vec<u8>>)> {
        match self.read_batch(paths) {
            Ok(out) => out,
            Err(_) => paths.iter().map(|p| (p.clone(), self.read(p))).collect(),
        }
    }

    fn timestamp(&self, _path: &str) -> DateTime<Utc> {
        self.committed_at
    }
}

impl GitCheckout {
    fn read_batch(&self, paths: &[String]) -> Result<Vec<(String, Result<Vec<u8>>)>> {
        let mut child = Command::new("git")
            .arg("-C")
            .arg(&self.repo)
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
        let requests: Vec<String> = paths
            .iter()
            .map(|p| {
                self.blobs
                    .get(p)
                    .map(|(oid, _)| oid.clone())
                    .unwrap_or_else(|| "0000000000000000000000000000000000000000".into())
            })
            .collect();
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || {
            for oid in requests {
                if writeln!(stdin, "{oid}").is_err() {
                    break;
                }
            }
        });
        let mut reader = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut out = Vec::with_capacity(paths.len());
        for path in paths {
            let mut header = String::new();
            reader.read_line(&mut header)?;
            let fields: Vec<&str> = header.split_whitespace().collect();
            if fields.len() == 3 {
                let size: usize = fields[2]
                    .parse()
                    .map_err(|e| Error::Git(format!("bad batch header `{header}`: {e}")))?;
                let mut buf = vec![0u8; size + 1];
                reader.read_exact(&mut buf)?;
                buf.pop();
                out.push((path.clone(), Ok(buf)));
            } else {
                out.push((
                    path.clone(),
                    Err(Error::Git(format!("object for `{path}` missing: {}", header.trim()))),
                ));
            }
        }
        let _ = writer.join();
        let _ = child.wait();
        Ok(out)
    }
}

/// A plain directory tree. `.git` is skipped; ignore rules are applied by the
/// ingest filter, not here.
#[derive(Clone, Debug)]
pub struct DirCheckout {
    root: PathBuf,
    label: String,
}

impl DirCheckout {
    pub fn new(root: impl Into<PathBuf>, revision_label: impl Into<String>) -> Result<Self> {
        let root = root.into();
        if !root.is_dir() {
            return Err(Error::Revision(format!("{} is not a readable directory", root.display())));
        }
        Ok(Self {
            root,
            label: revision_label.into(),
        })
    }
}

impl Checkout for DirCheckout {
    fn revision(&self) -> &str {
        &self.label
    }

    fn repo_name(&self) -> String {
        repo_name_from(&self.root.to_string_lossy())
    }

    fn list_files(&self) -> Result<Vec<FileEntry>> {
        let mut files = Vec::new();
        let walker = ignore::WalkBuilder::new(&self.root)
            .standard_filters(false)
            .filter_entry(|e| e.file_name() != ".git")
            .build();
        for entry in walker {
            let entry = match entry {
                Ok(e) => e,
                Err(e) => {
                    tracing::warn!("skipping unreadable entry: {e}");
                    continue;
                }
            };
            if !entry.file_type().is_some_and(|t| t.is_file()) {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(&self.root)
                .expect("walk stays under root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            let size = entry.metadata().map(|m| m.len()).unwrap_or(0);
            files.push(FileEntry { path: rel, size });
        }
        files.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(files)
    }

    fn read(&self, path: &str) -> Result<Vec<u8>> {
        Ok(std::fs::read(self.root.join(path))?)
    }

    fn timestamp(&self, path: &str) -> DateTime<Utc> {
        std::fs::metadata(self.root.join(path))
            .and_then(|m| m.modified())
            .map(DateTime::<Utc>::from)
            .unwrap_or(DateTime::UNIX_EPOCH)
    }
}

/// In-memory file tree; used for fixtures and tests.
#[derive(Clone, Debug, Default)]
pub struct MemoryCheckout {
    name: String,
    revision: String,
    timestamp: DateTime<Utc>,
    files: BTreeMap<String, Vec<u8>>,
}

impl MemoryCheckout {
    pub fn new(name: impl Into<String>, revision: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            revision: revision.into(),
            timestamp: DateTime::UNIX_EPOCH,
            files: BTreeMap::new(),
        }
    }

    pub fn with_file(mut self, path: impl Into<String>, content: impl Into<Vec<u8>>) -> Self {
        self.files.insert(path.into(), content.into());
        self
    }

    pub fn with_timestamp(mut self, ts: DateTime<Utc>) -> Self {
        self.timestamp = ts;
        self
    }

    pub fn insert(&mut self, path: impl Into<String>, content: impl Into<Vec<u8>>) {
        self.files.insert(path.into(), content.into());
    }

    pub fn remove(&mut self, path: &str) {
        self.files.remove(path);
    }

    pub fn set_revision(&mut self, revision: impl Into<String>) {
        self.revision = revision.into();
    }
}

impl Checkout for MemoryCheckout {
    fn revision(&self) -> &str {
        &self.revision
    }

    fn repo_name(&self) -> String {
        self.name.clone()
    }

    fn list_files(&self) -> Result<Vec<FileEntry>> {
        Ok(self
            .files
            .iter()
            .map(|(p, c)| FileEntry {
                path: p.clone(),
                size: c.len() as u64,
            })
            .collect())
    }

    fn read(&self, path: &str) -> Result<Vec<u8>> {
        self.files
            .get(path)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("`{path}` not in checkout")))
    }

    fn timestamp(&self, _path: &str) -> DateTime<Utc> {
        self.timestamp
    }
}

/// Last path component without a `.git` suffix.
pub fn repo_name_from(url_or_path: &str) -> String {
    let trimmed = url_or_path.trim_end_matches('/');
    let last = trimmed.rsplit(['/', ':']).next().unwrap_or(trimmed);
    let name = last.strip_suffix(".git").unwrap_or(last);
    if name.is_empty() || name == "." {
        "repository".into()
    } else {
        name.to_string()
    }
}

/// Opens a git checkout when `path` is the top of a work tree, otherwise a
/// plain directory labelled with `revision`.
pub fn open_checkout(path: &Path, revision: &str) -> Result<Box<dyn Checkout>> {
    let top = run_git(path, &["rev-parse", "--show-toplevel"])
        .ok()
        .map(|out| PathBuf::from(String::from_utf8_lossy(&out).trim()));
    let is_top = match (top.and_then(|t| t.canonicalize().ok()), path.canonicalize()) {
        (Some(t), Ok(p)) => t == p,
        _ => false,
    };
    if is_top {
        Ok(Box::new(GitCheckout::open(path, revision)?))
    } else {
        Ok(Box::new(DirCheckout::new(path, revision)?))
    }
}
