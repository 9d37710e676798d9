//! Versioned JSON snapshots.
//!
//! Header fields sit at the top level next to `nodes`, `edges` and the
//! per-file parse records. Embeddings are written either as float arrays or,
//! with `"embedding_encoding": "b64le_f32"`, as base64 of little-endian f32
//! bytes. Unknown top-level keys are ignored on load; unknown node or edge
//! kinds are errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    Edge, EnrichmentStatus, FileRecord, GraphMeta, KnowledgeGraph, LineSpan, Node, NodeId,
    NodeKind,
};
use crate::embedding::EmbeddingVector;
use crate::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;
const B64_ENCODING: &str = "b64le_f32";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmbeddingEncoding {
    #[default]
    FloatArray,
    Base64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EncodedVector {
    Floats(Vec<f32>),
    Base64(String),
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: NodeId,
    kind: NodeKind,
    name: String,
    #[serde(default)]
    qualified_name: String,
    path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size_bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    signature: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    docstring: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    raw_content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description_embedding: Option<EncodedVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    code_embedding: Option<EncodedVector>,
    last_modified: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line_span: Option<LineSpan>,
    #[serde(default)]
    enrichment: EnrichmentStatus,
}

#[derive(Serialize, Deserialize)]
struct SnapshotDoc {
    format_version: u64,
    graph_id: String,
    repo_url: String,
    revision: String,
    embedding_dim: Option<usize>,
    #[serde(default)]
    provider_fingerprint: String,
    created_at: DateTime<Utc>,
    updated_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding_encoding: Option<String>,
    #[serde(default)]
    next_id: Option<u64>,
    nodes: Vec<NodeRecord>,
    edges: Vec<Edge>,
    #[serde(default)]
    file_records: BTreeMap<String, FileRecord>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u64>,
}

fn encode(v: &EmbeddingVector, encoding: EmbeddingEncoding) -> EncodedVector {
    match encoding {
        EmbeddingEncoding::FloatArray => EncodedVector::Floats(v.as_slice().to_vec()),
        EmbeddingEncoding::Base64 => EncodedVector::Base64(B64.encode(v.to_le_bytes())),
    }
}

fn decode(v: EncodedVector) -> Result<EmbeddingVector> {
    match v {
        EncodedVector::Floats(values) => EmbeddingVector::from_unit(values),
        EncodedVector::Base64(text) => {
            let bytes = B64
                .decode(text.as_bytes())
                .map_err(|e| Error::InvalidEmbedding(format!("bad base64 embedding: {e}")))?;
            EmbeddingVector::from_le_bytes(&bytes)
        }
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::SnapshotParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

impl KnowledgeGraph {
    fn to_doc(&self, encoding: EmbeddingEncoding) -> SnapshotDoc {
        let GraphMeta {
            graph_id,
            repo_url,
            revision,
            embedding_dim,
            provider_fingerprint,
            created_at,
            updated_at,
        } = self.meta.clone();
        SnapshotDoc {
            format_version: FORMAT_VERSION,
            graph_id,
            repo_url,
            revision,
            embedding_dim,
            provider_fingerprint,
            created_at,
            updated_at,
            embedding_encoding: (encoding == EmbeddingEncoding::Base64).then(|| B64_ENCODING.to_string()),
            next_id: Some(self.next_id),
            nodes: self
                .nodes
                .values()
                .map(|n| NodeRecord {
                    id: n.id,
                    kind: n.kind,
                    name: n.name.clone(),
                    qualified_name: n.qualified_name.clone(),
                    path: n.path.clone(),
                    language: n.language.clone(),
                    size_bytes: n.size_bytes,
                    signature: n.signature.clone(),
                    docstring: n.docstring.clone(),
                    raw_content: n.raw_content.clone(),
                    description: n.description.clone(),
                    description_embedding: n.description_embedding.as_ref().map(|v| encode(v, encoding)),
                    code_embedding: n.code_embedding.as_ref().map(|v| encode(v, encoding)),
                    last_modified: n.last_modified,
                    line_span: n.line_span,
                    enrichment: n.enrichment,
                })
                .collect(),
            edges: self.edges.iter().copied().collect(),
            file_records: self.files.clone(),
        }
    }

    fn from_doc(doc: SnapshotDoc) -> Result<Self> {
        let mut nodes = BTreeMap::new();
        for rec in doc.nodes {
            let node = Node {
                id: rec.id,
                kind: rec.kind,
                name: rec.name,
                qualified_name: rec.qualified_name,
                path: rec.path,
                language: rec.language,
                size_bytes: rec.size_bytes,
                signature: rec.signature,
                docstring: rec.docstring,
                raw_content: rec.raw_content,
                description: rec.description,
                description_embedding: rec.description_embedding.map(decode).transpose()?,
                code_embedding: rec.code_embedding.map(decode).transpose()?,
                last_modified: rec.last_modified,
                line_span: rec.line_span,
                enrichment: rec.enrichment,
            };
            node.validate(doc.embedding_dim)?;
            if nodes.insert(node.id, node).is_some() {
                return Err(Error::Schema(format!("duplicate node id {}", rec.id)));
            }
        }
        let mut edges = std::collections::BTreeSet::new();
        for e in doc.edges {
            let (Some(s), Some(d)) = (nodes.get(&e.src), nodes.get(&e.dst)) else {
                return Err(Error::Schema(format!(
                    "edge {} -> {} references a missing node",
                    e.src, e.dst
                )));
            };
            if !e.kind.allows(s.kind, d.kind) {
                return Err(Error::EdgeConstraint {
                    kind: e.kind,
                    src_kind: s.kind,
                    dst_kind: d.kind,
                });
            }
            edges.insert(e);
        }
        let max_id = nodes.keys().next_back().map_or(0, |id| id.0);
        let next_id = doc.next_id.unwrap_or(max_id + 1).max(max_id + 1);
        let mut graph = KnowledgeGraph {
            meta: GraphMeta {
                graph_id: doc.graph_id,
                repo_url: doc.repo_url,
                revision: doc.revision,
                embedding_dim: doc.embedding_dim,
                provider_fingerprint: doc.provider_fingerprint,
                created_at: doc.created_at,
                updated_at: doc.updated_at,
            },
            nodes,
            edges,
            next_id,
            files: doc.file_records,
            index: Default::default(),
        };
        graph.rebuild_indexes();
        if graph.index.keys.len() != graph.nodes.len() {
            return Err(Error::Schema("two nodes share one identity key".into()));
        }
        Ok(graph)
    }

    pub fn to_snapshot_string(&self, encoding: EmbeddingEncoding) -> String {
        serde_json::to_string(&self.to_doc(encoding)).expect("snapshot serialization is infallible")
    }

    pub fn from_snapshot_str(text: &str) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(text).map_err(parse_error)?;
        match probe.format_version {
            Some(FORMAT_VERSION) => {}
            Some(found) => {
                return Err(Error::UnsupportedVersion {
                    found,
                    supported: FORMAT_VERSION,
                })
            }
            None => {
                return Err(Error::SnapshotParse {
                    line: 1,
                    column: 1,
                    message: "missing format_version".into(),
                })
            }
        }
        let doc: SnapshotDoc = serde_json::from_str(text).map_err(parse_error)?;
        Self::from_doc(doc)
    }

    /// Writes the snapshot through a temporary file and renames it into place.
    pub fn save_snapshot(&self, destination: &Path, encoding: EmbeddingEncoding) -> Result<()> {
        let dir = destination.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = dir {
            fs::create_dir_all(dir)?;
        }
        let tmp = destination.with_extension("json.tmp");
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(self.to_snapshot_string(encoding).as_bytes())?;
            file.sync_all()?;
        }
        fs::rename(&tmp, destination)?;
        Ok(())
    }

    pub fn load_snapshot(source: &Path) -> Result<Self> {
        let text = fs::read_to_string(source)?;
        Self::from_snapshot_str(&text)
    }

    /// SHA-256 over the canonical snapshot serialization.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_doc(EmbeddingEncoding::Base64))
            .expect("snapshot serialization is infallible");
        hex::encode(Sha256::digest(bytes))
    }
}
