//! Typed property graph of repository artifacts.
//!
//! Storage keeps nodes and edges in ordered collections so that iteration,
//! serialization and hashing are deterministic. Adjacency and identity indexes
//! are derived data and are rebuilt on load.

pub mod compare;
pub mod query;
pub mod record;
pub mod snapshot;
pub mod stats;
pub mod traverse;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::{Error, Result};

pub use query::{ReadRequest, ReadResult};
pub use record::{FileRecord, ImportBinding, ParseStatus, RawRelation};
pub use stats::GraphStats;
pub use traverse::Direction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Root,
    Folder,
    File,
    Class,
    Function,
    MemberFunction,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Root,
        NodeKind::Folder,
        NodeKind::File,
        NodeKind::Class,
        NodeKind::Function,
        NodeKind::MemberFunction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Root => "Root",
            NodeKind::Folder => "Folder",
            NodeKind::File => "File",
            NodeKind::Class => "Class",
            NodeKind::Function => "Function",
            NodeKind::MemberFunction => "MemberFunction",
        }
    }

    /// Code entities extracted by parsers.
    pub fn is_entity(self) -> bool {
        matches!(
            self,
            NodeKind::Class | NodeKind::Function | NodeKind::MemberFunction
        )
    }

    pub fn is_callable(self) -> bool {
        matches!(self, NodeKind::Function | NodeKind::MemberFunction)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown node kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    Contains,
    Implements,
    Calls,
    Inherits,
    Refers,
    Tests,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 6] = [
        EdgeKind::Contains,
        EdgeKind::Implements,
        EdgeKind::Calls,
        EdgeKind::Inherits,
        EdgeKind::Refers,
        EdgeKind::Tests,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Contains => "Contains",
            EdgeKind::Implements => "Implements",
            EdgeKind::Calls => "Calls",
            EdgeKind::Inherits => "Inherits",
            EdgeKind::Refers => "Refers",
            EdgeKind::Tests => "Tests",
        }
    }

    /// Endpoint-kind constraint for this relation.
    pub fn allows(self, src: NodeKind, dst: NodeKind) -> bool {
        use NodeKind::*;
        match self {
            EdgeKind::Contains => matches!(
                (src, dst),
                (Root | Folder, Folder | File) | (File, Class | Function)
            ),
            EdgeKind::Implements => matches!(
                (src, dst),
                (File, Class | Function | MemberFunction) | (Class, MemberFunction)
            ),
            EdgeKind::Calls => src.is_callable() && dst.is_callable(),
            EdgeKind::Inherits => src == Class && dst == Class,
            EdgeKind::Refers => src == File && dst == File,
            EdgeKind::Tests => {
                matches!(src, File | Function | MemberFunction)
                    && matches!(dst, File | Function | MemberFunction)
            }
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown edge kind `{s}`")))
    }
}

/// 1-based inclusive line range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: u32,
    pub end: u32,
}

impl LineSpan {
    pub fn new(start: u32, end: u32) -> Self {
        Self { start, end }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichmentStatus {
    /// New or changed since the last enrichment run.
    #[default]
    Pending,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    /// Dotted name inside the defining file (`Class.method`); empty for
    /// Folder/File, the repository name for Root.
    #[serde(default)]
    pub qualified_name: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub docstring: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description_embedding: Option<EmbeddingVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_embedding: Option<EmbeddingVector>,
    pub last_modified: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_span: Option<LineSpan>,
    #[serde(default)]
    pub enrichment: EnrichmentStatus,
}

impl Node {
    fn blank(kind: NodeKind, name: String, path: String) -> Self {
        Self {
            id: NodeId(0),
            kind,
            name,
            qualified_name: String::new(),
            path,
            language: None,
            size_bytes: None,
            signature: None,
            docstring: None,
            raw_content: None,
            description: None,
            description_embedding: None,
            code_embedding: None,
            last_modified: DateTime::<Utc>::UNIX_EPOCH,
            line_span: None,
            enrichment: EnrichmentStatus::Pending,
        }
    }

    pub fn root(repo_name: impl Into<String>) -> Self {
        let name = repo_name.into();
        let mut node = Self::blank(NodeKind::Root, name.clone(), String::new());
        node.qualified_name = name;
        node
    }

    pub fn folder(path: impl Into<String>) -> Self {
        let path = path.into();
        Self::blank(NodeKind::Folder, base_name(&path).to_string(), path)
    }

    pub fn file(path: impl Into<String>, language: impl Into<String>, size_bytes: u64) -> Self {
        let path = path.into();
        let mut node = Self::blank(NodeKind::File, base_name(&path).to_string(), path);
        node.language = Some(language.into());
        node.size_bytes = Some(size_bytes);
        node
    }

    /// Class, Function or MemberFunction defined in the file at `path`.
    pub fn entity(
        kind: NodeKind,
        path: impl Into<String>,
        qualified_name: impl Into<String>,
        span: LineSpan,
    ) -> Self {
        let qualified_name = qualified_name.into();
        let name = qualified_name
            .rsplit('.')
            .next()
            .unwrap_or(&qualified_name)
            .to_string();
        let mut node = Self::blank(kind, name, path.into());
        node.qualified_name = qualified_name;
        node.line_span = Some(span);
        node
    }

    pub fn with_timestamp(mut self, ts: DateTime<Utc>) -> Self {
        self.last_modified = ts;
        self
    }

    pub fn key(&self) -> NodeKey {
        NodeKey {
            kind: self.kind,
            path: self.path.clone(),
            qualified_name: self.qualified_name.clone(),
        }
    }

    /// Embedding used for ranking: description first, code as fallback.
    pub fn search_embedding(&self) -> Option<&EmbeddingVector> {
        self.description_embedding
            .as_ref()
            .or(self.code_embedding.as_ref())
    }

    /// Equality ignoring id and timestamps.
    pub fn same_content(&self, other: &Node) -> bool {
        let mut a = self.clone();
        a.id = other.id;
        a.last_modified = other.last_modified;
        a == *other
    }

    fn validate(&self, embedding_dim: Option<usize>) -> Result<()> {
        let violation = |msg: String| Err(Error::Schema(format!("{} `{}`: {msg}", self.kind, self.path)));
        match self.kind {
            NodeKind::Root => {
                if !self.path.is_empty() {
                    return violation("Root must have an empty path".into());
                }
            }
            _ if self.path.is_empty() => return violation("path must not be empty".into()),
            _ => {}
        }
        let is_file = self.kind == NodeKind::File;
        if is_file && (self.language.is_none() || self.size_bytes.is_none()) {
            return violation("File nodes need language and size_bytes".into());
        }
        if !is_file && (self.language.is_some() || self.size_bytes.is_some()) {
            return violation("only File nodes carry language and size_bytes".into());
        }
        if self.signature.is_some() && !self.kind.is_callable() {
            return violation("only functions carry a signature".into());
        }
        if self.kind.is_entity() && self.qualified_name.is_empty() {
            return violation("entities need a qualified name".into());
        }
        if let Some(span) = self.line_span {
            if span.start == 0 || span.start > span.end {
                return violation(format!("invalid line span {}..{}", span.start, span.end));
            }
        }
        if let Some(dim) = embedding_dim {
            for emb in [&self.description_embedding, &self.code_embedding]
                .into_iter()
                .flatten()
            {
                if emb.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: emb.dim(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn base_name(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

/// Identity of a node across updates: kind, path and qualified name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    pub kind: NodeKind,
    pub path: String,
    pub qualified_name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub graph_id: String,
    pub repo_url: String,
    pub revision: String,
    pub embedding_dim: Option<usize>,
    pub provider_fingerprint: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Clone, Debug, Default)]
struct Indexes {
    keys: HashMap<NodeKey, NodeId>,
    paths: HashMap<String, NodeId>,
    out_adj: HashMap<NodeId, BTreeSet<(EdgeKind, NodeId)>>,
    in_adj: HashMap<NodeId, BTreeSet<(EdgeKind, NodeId)>>,
}

/// A repository graph pinned to one revision.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    pub meta: GraphMeta,
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeSet<Edge>,
    next_id: u64,
    files: BTreeMap<String, FileRecord>,
    index: Indexes,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta
            && self.next_id == other.next_id
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.files == other.files
    }
}

impl KnowledgeGraph {
    pub fn new(repo_url: impl Into<String>, revision: impl Into<String>) -> Self {
        let now = Utc::now();
        let repo_url = repo_url.into();
        let revision = revision.into();
        Self {
            meta: GraphMeta {
                graph_id: default_graph_id(&repo_url, &revision),
                repo_url,
                revision,
                embedding_dim: None,
                provider_fingerprint: String::new(),
                created_at: now,
                updated_at: now,
            },
            nodes: BTreeMap::new(),
            edges: BTreeSet::new(),
            next_id: 1,
            files: BTreeMap::new(),
            index: Indexes::default(),
        }
    }

    pub fn with_embedding_dim(mut self, dim: usize) -> Self {
        self.meta.embedding_dim = Some(dim);
        self
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.meta.embedding_dim
    }

    /// Fixes the embedding dimension. Fails if already set to another value.
    pub fn set_embedding_dim(&mut self, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding_dim must be positive".into()));
        }
        match self.meta.embedding_dim {
            Some(existing) if existing != dim => Err(Error::DimensionMismatch {
                expected: existing,
                actual: dim,
            }),
            _ => {
                self.meta.embedding_dim = Some(dim);
                Ok(())
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut Node> {
        self.nodes.get_mut(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId, kind: EdgeKind) -> bool {
        self.edges.contains(&Edge { src, dst, kind })
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn root(&self) -> Option<&Node> {
        self.nodes.values().find(|n| n.kind == NodeKind::Root)
    }

    pub fn lookup(&self, key: &NodeKey) -> Option<NodeId> {
        self.index.keys.get(key).copied()
    }

    /// Folder or File node at a repository-relative path.
    pub fn node_by_path(&self, path: &str) -> Option<&Node> {
        self.index.paths.get(path).and_then(|id| self.nodes.get(id))
    }

    pub fn file_paths(&self) -> impl Iterator<Item = &str> {
        self.nodes_of_kind(NodeKind::File).map(|n| n.path.as_str())
    }

    /// Outgoing `(kind, target)` pairs of a node.
    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = (EdgeKind, NodeId)> + '_ {
        self.index.out_adj.get(&id).into_iter().flatten().copied()
    }

    /// Incoming `(kind, source)` pairs of a node.
    pub fn incoming(&self, id: NodeId) -> impl Iterator<Item = (EdgeKind, NodeId)> + '_ {
        self.index.in_adj.get(&id).into_iter().flatten().copied()
    }

    pub fn file_record(&self, path: &str) -> Option<&FileRecord> {
        self.files.get(path)
    }

    pub fn file_records(&self) -> impl Iterator<Item = (&str, &FileRecord)> {
        self.files.iter().map(|(p, r)| (p.as_str(), r))
    }

    pub fn set_file_record(&mut self, path: impl Into<String>, record: FileRecord) {
        self.files.insert(path.into(), record);
    }

    pub fn remove_file_record(&mut self, path: &str) -> Option<FileRecord> {
        self.files.remove(path)
    }

    /// Inserts `node`, or replaces the mutable fields of the node with the same
    /// identity key. The incoming `id` is ignored; the stored id is returned.
    ///
    /// Replacing with identical content leaves the stored node (including its
    /// timestamp) untouched.
    pub fn upsert_node(&mut self, mut node: Node) -> Result<NodeId> {
        let dim = self.meta.embedding_dim.or_else(|| {
            node.description_embedding
                .as_ref()
                .or(node.code_embedding.as_ref())
                .map(EmbeddingVector::dim)
        });
        node.validate(dim)?;
        self.meta.embedding_dim = dim;
        let key = node.key();
        if let Some(&id) = self.index.keys.get(&key) {
            node.id = id;
            let existing = self.nodes.get_mut(&id).expect("index out of sync");
            if !existing.same_content(&node) {
                *existing = node;
            }
            return Ok(id);
        }
        if node.kind == NodeKind::Root {
            if let Some(root) = self.root() {
                return Err(Error::Schema(format!(
                    "graph already has Root `{}`; cannot add second Root `{}`",
                    root.name, node.name
                )));
            }
        }
        let id = NodeId(self.next_id);
        self.next_id += 1;
        node.id = id;
        if matches!(node.kind, NodeKind::Folder | NodeKind::File) {
            self.index.paths.insert(node.path.clone(), id);
        }
        self.index.keys.insert(key, id);
        self.nodes.insert(id, node);
        Ok(id)
    }

    /// Removes a node and every incident edge.
    pub fn remove_node(&mut self, id: NodeId) -> Option<Node> {
        let node = self.nodes.remove(&id)?;
        let outgoing: Vec<_> = self.outgoing(id).collect();
        let incoming: Vec<_> = self.incoming(id).collect();
        for (kind, dst) in outgoing {
            self.remove_edge(id, dst, kind);
        }
        for (kind, src) in incoming {
            self.remove_edge(src, id, kind);
        }
        self.index.out_adj.remove(&id);
        self.index.in_adj.remove(&id);
        self.index.keys.remove(&node.key());
        if self.index.paths.get(&node.path) == Some(&id) {
            self.index.paths.remove(&node.path);
        }
        Some(node)
    }

    /// Adds a typed edge. Returns `false` if the edge already existed.
    pub fn add_edge(&mut self, src: NodeId, dst: NodeId, kind: EdgeKind) -> Result<bool> {
        let src_kind = self.nodes.get(&src).ok_or(Error::UnknownNode(src))?.kind;
        let dst_kind = self.nodes.get(&dst).ok_or(Error::UnknownNode(dst))?.kind;
        if !kind.allows(src_kind, dst_kind) {
            return Err(Error::EdgeConstraint {
                kind,
                src_kind,
                dst_kind,
            });
        }
        if kind == EdgeKind::Contains && src_kind != NodeKind::File {
            // Filesystem containment is a tree: a second parent is a schema error.
            let existing_parent = self
                .incoming(dst)
                .find(|&(k, p)| k == EdgeKind::Contains && p != src && self.nodes[&p].kind != NodeKind::File);
            if let Some((_, parent)) = existing_parent {
                return Err(Error::Schema(format!(
                    "{} `{}` is already contained by node {parent}",
                    dst_kind, self.nodes[&dst].path
                )));
            }
            if src == dst || self.is_structural_ancestor(dst, src) {
                return Err(Error::Schema("Contains edge would create a cycle".into()));
            }
        }
        let inserted = self.edges.insert(Edge { src, dst, kind });
        if inserted {
            self.index.out_adj.entry(src).or_default().insert((kind, dst));
            self.index.in_adj.entry(dst).or_default().insert((kind, src));
        }
        Ok(inserted)
    }

    pub fn remove_edge(&mut self, src: NodeId, dst: NodeId, kind: EdgeKind) -> bool {
        let removed = self.edges.remove(&Edge { src, dst, kind });
        if removed {
            if let Some(set) = self.index.out_adj.get_mut(&src) {
                set.remove(&(kind, dst));
            }
            if let Some(set) = self.index.in_adj.get_mut(&dst) {
                set.remove(&(kind, src));
            }
        }
        removed
    }

    /// Removes every edge of the given kinds.
    pub fn clear_edges_of_kind(&mut self, kinds: &[EdgeKind]) {
        let doomed: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| kinds.contains(&e.kind))
            .copied()
            .collect();
        for e in doomed {
            self.remove_edge(e.src, e.dst, e.kind);
        }
    }

    fn is_structural_ancestor(&self, ancestor: NodeId, mut node: NodeId) -> bool {
        loop {
            let parent = self.incoming(node).find(|&(k, p)| {
                k == EdgeKind::Contains && self.nodes.get(&p).is_some_and(|n| n.kind != NodeKind::File)
            });
            match parent {
                Some((_, p)) if p == ancestor => return true,
                Some((_, p)) => node = p,
                None => return false,
            }
        }
    }

    /// The File that defines an entity (incoming Implements, then Contains).
    pub fn defining_file(&self, id: NodeId) -> Option<NodeId> {
        let node = self.nodes.get(&id)?;
        if node.kind == NodeKind::File {
            return Some(id);
        }
        for kind in [EdgeKind::Implements, EdgeKind::Contains] {
            let file = self
                .incoming(id)
                .filter(|&(k, _)| k == kind)
                .map(|(_, src)| src)
                .find(|src| self.nodes[src].kind == NodeKind::File);
            if file.is_some() {
                return file;
            }
        }
        None
    }

    pub fn touch(&mut self) {
        self.meta.updated_at = Utc::now();
    }

    /// Checks the whole-graph invariants: one Root, a Contains forest covering
    /// every Folder/File, a defining-file edge for every entity, endpoint
    /// constraints on every edge and consistent embedding dimensions.
    pub fn validate(&self) -> Result<()> {
        let roots: Vec<_> = self.nodes_of_kind(NodeKind::Root).collect();
        if roots.len() != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one Root, found {}",
                roots.len()
            )));
        }
        let root = roots[0].id;
        for node in self.nodes.values() {
            node.validate(self.meta.embedding_dim)?;
        }
        for edge in &self.edges {
            let (s, d) = (&self.nodes[&edge.src], &self.nodes[&edge.dst]);
            if !edge.kind.allows(s.kind, d.kind) {
                return Err(Error::EdgeConstraint {
                    kind: edge.kind,
                    src_kind: s.kind,
                    dst_kind: d.kind,
                });
            }
        }
        for node in self.nodes.values() {
            match node.kind {
                NodeKind::Folder | NodeKind::File => {
                    let mut cursor = node.id;
                    let mut steps = 0;
                    while cursor != root {
                        let parents: Vec<_> = self
                            .incoming(cursor)
                            .filter(|&(k, p)| {
                                k == EdgeKind::Contains
                                    && matches!(self.nodes[&p].kind, NodeKind::Root | NodeKind::Folder)
                            })
                            .collect();
                        if parents.len() != 1 {
                            return Err(Error::Schema(format!(
                                "`{}` has {} structural parents",
                                self.nodes[&cursor].path,
                                parents.len()
                            )));
                        }
                        cursor = parents[0].1;
                        steps += 1;
                        if steps > self.nodes.len() {
                            return Err(Error::Schema("Contains cycle".into()));
                        }
                    }
                }
                kind if kind.is_entity() => {
                    let defined = self.incoming(node.id).any(|(k, p)| {
                        matches!(k, EdgeKind::Implements | EdgeKind::Contains)
                            && self.nodes[&p].kind == NodeKind::File
                            && self.nodes[&p].path == node.path
                    });
                    if !defined {
                        return Err(Error::Schema(format!(
                            "{} `{}` in `{}` has no defining File edge",
                            node.kind, node.qualified_name, node.path
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn rebuild_indexes(&mut self) {
        let mut index = Indexes::default();
        for node in self.nodes.values() {
            index.keys.insert(node.key(), node.id);
            if matches!(node.kind, NodeKind::Folder | NodeKind::File) {
                index.paths.insert(node.path.clone(), node.id);
            }
        }
        for e in &self.edges {
            index.out_adj.entry(e.src).or_default().insert((e.kind, e.dst));
            index.in_adj.entry(e.dst).or_default().insert((e.kind, e.src));
        }
        self.index = index;
    }
}

fn default_graph_id(repo_url: &str, revision: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(format!("{repo_url}\0{revision}"));
    hex::encode(&digest[..8])
}
