//! Content-addressed cache of descriptions and embeddings.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum CacheValue {
    Description(String),
    Embedding(Vec<f32>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub value: CacheValue,
    pub created_at: DateTime<Utc>,
}

/// SHA-256 over the input, provider identity and template version, with a
/// separator byte between the parts.
pub fn cache_key(input: &str, provider: &str, version: &str) -> String {
    let mut h = Sha256::new();
    for (i, part) in [input, provider, version].into_iter().enumerate() {
        if i > 0 {
            h.update([0u8]);
        }
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Default)]
pub struct EnrichCache {
    entries: RwLock<HashMap<String, CacheEntry>>,
}

impl EnrichCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<CacheValue> {
        self.entries.read().expect("cache lock").get(key).map(|e| e.value.clone())
    }

    /// Inserts unless the key exists; entries are never overwritten.
    pub fn insert(&self, key: String, value: CacheValue) {
        self.entries
            .write()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| CacheEntry {
                value,
                created_at: Utc::now(),
            });
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::new());
        }
        let map: HashMap<String, CacheEntry> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(Self {
            entries: RwLock::new(map),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let entries = self.entries.read().expect("cache lock");
        let sorted: BTreeMap<&String, &CacheEntry> = entries.iter().collect();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(&sorted)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}
