//! File-level change sets between two revisions.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::checkout::{git, resolve_revision, Checkout};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    pub old_revision: String,
    pub new_revision: String,
    pub added: BTreeSet<String>,
    pub modified: BTreeSet<String>,
    pub deleted: BTreeSet<String>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.modified.is_empty() && self.deleted.is_empty()
    }

    pub fn len(&self) -> usize {
        self.added.len() + self.modified.len() + self.deleted.len()
    }

    fn check_disjoint(&self) -> Result<()> {
        let overlap = self
            .added
            .intersection(&self.modified)
            .chain(self.added.intersection(&self.deleted))
            .chain(self.modified.intersection(&self.deleted))
            .next();
        match overlap {
            Some(p) => Err(Error::Schema(format!("`{p}` appears in more than one change class"))),
            None => Ok(()),
        }
    }
}

/// Classifies files changed between `old` and `new` in a git repository.
/// `new` must descend from `old`; renames are reported as delete + add.
pub fn diff_revisions(repo: &Path, old: &str, new: &str) -> Result<ChangeSet> {
    let old_rev = resolve_revision(repo, old)?;
    let new_rev = resolve_revision(repo, new)?;
    let mut cs = ChangeSet {
        old_revision: old_rev.clone(),
        new_revision: new_rev.clone(),
        ..ChangeSet::default()
    };
    if old_rev == new_rev {
        return Ok(cs);
    }
    let ancestor = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(["merge-base", "--is-ancestor", &old_rev, &new_rev])
        .status()
        .map_err(|e| Error::Git(format!("cannot run git: {e}")))?;
    if !ancestor.success() {
        return Err(Error::Revision(format!(
            "{new_rev} is not a descendant of {old_rev}; updates must follow one branch"
        )));
    }
    let out = git(repo, &["diff", "--name-status", "--no-renames", "-z", &old_rev, &new_rev])?;
    let fields: Vec<String> = out
        .split(|b| *b == 0)
        .filter(|f| !f.is_empty())
        .map(|f| String::from_utf8_lossy(f).into_owned())
        .collect();
    for pair in fields.chunks(2) {
        let [status, path] = pair else {
            return Err(Error::Git("truncated diff output".into()));
        };
        match status.chars().next() {
            Some('A') => cs.added.insert(path.clone()),
            Some('D') => cs.deleted.insert(path.clone()),
            Some('M' | 'T') => cs.modified.insert(path.clone()),
            _ => return Err(Error::Git(format!("unexpected diff status `{status}` for {path}"))),
        };
    }
    cs.check_disjoint()?;
    Ok(cs)
}

/// Content-based change set between two arbitrary checkouts.
pub fn diff_checkouts(old: &dyn Checkout, new: &dyn Checkout) -> Result<ChangeSet> {
    let old_files: BTreeSet<String> = old.list_files()?.into_iter().map(|f| f.path).collect();
    let new_files: BTreeSet<String> = new.list_files()?.into_iter().map(|f| f.path).collect();
    let mut cs = ChangeSet {
        old_revision: old.revision().to_string(),
        new_revision: new.revision().to_string(),
        added: new_files.difference(&old_files).cloned().collect(),
        deleted: old_files.difference(&new_files).cloned().collect(),
        ..ChangeSet::default()
    };
    for p in old_files.intersection(&new_files) {
        if old.read(p)? != new.read(p)? {
            cs.modified.insert(p.clone());
        }
    }
    Ok(cs)
}
