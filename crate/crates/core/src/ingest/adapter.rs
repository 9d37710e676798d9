//! Language adapter interface and registry.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::{ImportBinding, LineSpan, NodeKind, RawRelation};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedEntity {
    pub kind: NodeKind,
    pub name: String,
    pub qualified_name: String,
    pub signature: Option<String>,
    pub docstring: Option<String>,
    pub raw_content: String,
    pub line_span: LineSpan,
    /// Qualified name of the enclosing entity, if any.
    pub parent: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedFile {
    pub path: String,
    pub language: String,
    pub docstring: Option<String>,
    pub entities: Vec<ParsedEntity>,
    pub imports: Vec<ImportBinding>,
    pub relations: Vec<RawRelation>,
}

impl ParsedFile {
    /// Spans inside the file, parents resolvable, qualified names unique per kind.
    pub fn validate(&self, line_count: u32) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entities {
            if !e.kind.is_entity() {
                return Err(Error::Schema(format!("{}: {} is not an entity kind", self.path, e.kind)));
            }
            if e.line_span.start == 0 || e.line_span.start > e.line_span.end || e.line_span.end > line_count.max(1) {
                return Err(Error::Schema(format!(
                    "{}: span {}..{} of `{}` outside 1..{line_count}",
                    self.path, e.line_span.start, e.line_span.end, e.qualified_name
                )));
            }
            if !seen.insert((e.kind, e.qualified_name.as_str())) {
                return Err(Error::Schema(format!(
                    "{}: duplicate entity `{}`",
                    self.path, e.qualified_name
                )));
            }
        }
        let names: BTreeSet<&str> = self.entities.iter().map(|e| e.qualified_name.as_str()).collect();
        for e in &self.entities {
            if let Some(p) = &e.parent {
                if !names.contains(p.as_str()) {
                    return Err(Error::Schema(format!(
                        "{}: parent `{p}` of `{}` not found",
                        self.path, e.qualified_name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Repository facts needed to map an import to a file.
pub trait ModuleIndex {
    fn has_file(&self, path: &str) -> bool;
    /// Files whose path ends with `/{suffix}` or equals it, sorted.
    fn files_with_suffix(&self, suffix: &str) -> Vec<&str>;
}

pub trait ParserAdapter: Send + Sync {
    fn language(&self) -> &str;

    fn parse(&self, content: &str, path: &str) -> Result<ParsedFile>;

    /// File implementing module `module` imported from `from_path` with
    /// `level` leading dots.
    fn resolve_module(&self, _from_path: &str, _module: &str, _level: u32, _index: &dyn ModuleIndex) -> Option<String> {
        None
    }
}

/// Produces File-level information only.
#[derive(Clone, Copy, Debug, Default)]
pub struct FallbackAdapter;

impl ParserAdapter for FallbackAdapter {
    fn language(&self) -> &str {
        "*"
    }

    fn parse(&self, _content: &str, path: &str) -> Result<ParsedFile> {
        Ok(ParsedFile {
            path: path.to_string(),
            language: crate::lang::language_for_path(path).to_string(),
            ..ParsedFile::default()
        })
    }
}

#[derive(Clone)]
pub struct AdapterRegistry {
    adapters: Vec<Arc<dyn ParserAdapter>>,
    fallback: Arc<dyn ParserAdapter>,
}

impl std::fmt::Debug for AdapterRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list()
            .entries(self.adapters.iter().map(|a| a.language().to_string()))
            .finish()
    }
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        Self::empty().with(Arc::new(super::python::PythonAdapter))
    }
}

impl AdapterRegistry {
    /// Registry that only has the fallback adapter.
    pub fn empty() -> Self {
        Self {
            adapters: Vec::new(),
            fallback: Arc::new(FallbackAdapter),
        }
    }

    pub fn with(mut self, adapter: Arc<dyn ParserAdapter>) -> Self {
        self.adapters.retain(|a| a.language() != adapter.language());
        self.adapters.push(adapter);
        self
    }

    pub fn languages(&self) -> Vec<&str> {
        self.adapters.iter().map(|a| a.language()).collect()
    }

    /// The adapter for `language`, and whether it is the fallback.
    pub fn for_language(&self, language: &str) -> (&dyn ParserAdapter, bool) {
        match self.adapters.iter().find(|a| a.language() == language) {
            Some(a) => (a.as_ref(), false),
            None => (self.fallback.as_ref(), true),
        }
    }
}
