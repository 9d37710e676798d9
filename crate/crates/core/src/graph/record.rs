//! Per-file parse records kept alongside the graph.
//!
//! Relations are stored unresolved so that cross-file edges can be recomputed
//! after an incremental update without re-parsing unchanged files.

use serde::{Deserialize, Serialize};

use super::EdgeKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseStatus {
    /// Parsed by a language adapter.
    Parsed,
    /// Handled by the line-based fallback; no entities extracted.
    Fallback,
    /// The adapter failed on this file.
    Failed { message: String },
}

/// One name bound by an import statement.
///
/// `import a.b` binds `a.b` to module `a.b`; `from a.b import c as d` binds
/// `d` to symbol `c` of module `a.b`; `level` counts leading dots of a
/// relative import.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ImportBinding {
    pub alias: String,
    pub module: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    #[serde(default)]
    pub level: u32,
    pub line: u32,
}

/// A relation whose target is still a name as written in the source.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RawRelation {
    pub kind: EdgeKind,
    /// Qualified name of the source entity within its file.
    pub source: String,
    /// Target as written: `name`, `self.method` or a dotted path.
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub language: String,
    #[serde(flatten)]
    pub status: ParseStatus,
    #[serde(default)]
    pub imports: Vec<ImportBinding>,
    #[serde(default)]
    pub relations: Vec<RawRelation>,
}

impl FileRecord {
    pub fn fallback(language: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            status: ParseStatus::Fallback,
            imports: Vec::new(),
            relations: Vec::new(),
        }
    }
}
