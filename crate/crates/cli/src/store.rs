//! In-memory graph registry backed by a snapshot directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use repograph_core::graph::snapshot::EmbeddingEncoding;
use repograph_core::{KnowledgeGraph, Result};

/// One hosted graph. Readers take the current `Arc` and keep a consistent
/// view while a writer builds the replacement off to the side.
pub struct GraphEntry {
    current: RwLock<Arc<KnowledgeGraph>>,
    /// Serializes updates of this graph.
    pub writer: tokio::sync::Mutex<()>,
}

impl GraphEntry {
    fn new(graph: KnowledgeGraph) -> Self {
        Self {
            current: RwLock::new(Arc::new(graph)),
            writer: tokio::sync::Mutex::new(()),
        }
    }

    pub fn snapshot(&self) -> Arc<KnowledgeGraph> {
        self.current.read().expect("graph lock").clone()
    }

    fn replace(&self, graph: KnowledgeGraph) {
        *self.current.write().expect("graph lock") = Arc::new(graph);
    }
}

pub struct GraphStore {
    dir: Option<PathBuf>,
    graphs: RwLock<BTreeMap<String, Arc<GraphEntry>>>,
}

impl GraphStore {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            graphs: RwLock::default(),
        }
    }

    /// Opens `dir`, loading every `*.json` snapshot in it.
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let store = Self {
            dir: Some(dir.to_path_buf()),
            graphs: RwLock::default(),
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            match KnowledgeGraph::load_snapshot(&p) {
                Ok(g) => {
                    store.insert_unsaved(g);
                }
                Err(e) => tracing::warn!("skipping snapshot {}: {e}", p.display()),
            }
        }
        Ok(store)
    }

    fn snapshot_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn persist(&self, graph: &KnowledgeGraph) -> Result<()> {
        if let Some(p) = self.snapshot_path(&graph.meta.graph_id) {
            graph.save_snapshot(&p, EmbeddingEncoding::Base64)?;
        }
        Ok(())
    }

    fn insert_unsaved(&self, graph: KnowledgeGraph) -> String {
        let id = graph.meta.graph_id.clone();
        let mut map = self.graphs.write().expect("store lock");
        match map.get(&id) {
            Some(entry) => entry.replace(graph),
            None => {
                map.insert(id.clone(), Arc::new(GraphEntry::new(graph)));
            }
        }
        id
    }

    /// Adds or replaces a graph under its own id and writes its snapshot.
    pub fn insert(&self, graph: KnowledgeGraph) -> Result<String> {
        self.persist(&graph)?;
        Ok(self.insert_unsaved(graph))
    }

    /// Swaps in a new version of an existing entry.
    pub fn replace(&self, entry: &GraphEntry, graph: KnowledgeGraph) -> Result<()> {
        self.persist(&graph)?;
        entry.replace(graph);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Arc<GraphEntry>> {
        self.graphs.read().expect("store lock").get(id).cloned()
    }

    pub fn ids(&self) -> Vec<String> {
        self.graphs.read().expect("store lock").keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.graphs.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
