//! Append-only JSON Lines audit log.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub timestamp: DateTime<Utc>,
    /// Method and path, e.g. `POST /graphs/ab12/search`.
    pub endpoint: String,
    /// SHA-256 of method, path, query string and body.
    pub request_digest: String,
    pub graph_id: Option<String>,
    pub duration_ms: f64,
    /// HTTP status of the response.
    pub outcome: u16,
}

pub fn request_digest(method: &str, path: &str, query: &str, body: &[u8]) -> String {
    let mut h = Sha256::new();
    for part in [method.as_bytes(), path.as_bytes(), query.as_bytes()] {
        h.update(part);
        h.update([0]);
    }
    h.update(body);
    hex::encode(h.finalize())
}

/// Graph id from `/graphs/{id}/...` paths.
pub fn graph_id_of(path: &str) -> Option<String> {
    let mut parts = path.trim_start_matches('/').split('/');
    (parts.next() == Some("graphs")).then(|| parts.next()).flatten().filter(|s| !s.is_empty()).map(str::to_string)
}

#[derive(Default)]
pub struct AuditLog {
    file: Option<Mutex<File>>,
    records: Mutex<Vec<AuditRecord>>,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: &Path) -> std::io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            file: Some(Mutex::new(file)),
            records: Mutex::default(),
        })
    }

    pub fn append(&self, record: AuditRecord) {
        if let Some(f) = &self.file {
            let line = serde_json::to_string(&record).expect("audit record serializes");
            let mut f = f.lock().expect("audit file lock");
            if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
                tracing::error!("audit log write failed: {e}");
            }
        }
        self.records.lock().expect("audit lock").push(record);
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        self.records.lock().expect("audit lock").clone()
    }
}
