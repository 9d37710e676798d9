use std::path::{Path, PathBuf};

use repograph_core::clustering::ClusterMethod;
use repograph_core::enrich::HttpProviderConfig;
use repograph_core::retrieval::{PreprocessMode, RetrievalRequest, TraversalMode};
use repograph_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const ENV_SUMMARIZER_URL: &str = "REPOGRAPH_SUMMARIZER_URL";
pub const ENV_EMBEDDER_URL: &str = "REPOGRAPH_EMBEDDER_URL";
pub const ENV_LLM_URL: &str = "REPOGRAPH_LLM_URL";
pub const ENV_API_KEY: &str = "REPOGRAPH_API_KEY";
pub const ENV_STORE: &str = "REPOGRAPH_STORE";

/// Service and CLI settings. Unset provider endpoints select the stub providers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub store_dir: PathBuf,
    pub summarizer: Option<HttpProviderConfig>,
    pub embedder: Option<HttpProviderConfig>,
    /// Query preprocessing and file discovery endpoint.
    pub llm: Option<HttpProviderConfig>,
    pub embedding_dim: usize,
    pub default_mode: PreprocessMode,
    pub default_k: usize,
    pub default_traversal: TraversalMode,
    pub default_budget_fraction: Option<f64>,
    pub cluster_method: ClusterMethod,
    pub cluster_seed: u64,
    pub audit_log: Option<PathBuf>,
    pub enrich_cache: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            store_dir: PathBuf::from("graphs"),
            summarizer: None,
            embedder: None,
            llm: None,
            embedding_dim: 256,
            default_mode: PreprocessMode::None,
            default_k: 50,
            default_traversal: TraversalMode::Default,
            default_budget_fraction: None,
            cluster_method: ClusterMethod::Louvain,
            cluster_seed: 42,
            audit_log: None,
            enrich_cache: None,
        }
    }
}

fn endpoint(slot: &mut Option<HttpProviderConfig>, url: String, key: &Option<String>) {
    let cfg = slot.get_or_insert_with(|| HttpProviderConfig::new(url.clone()));
    cfg.base_url = url;
    if key.is_some() {
        cfg.api_key = key.clone();
    }
}

impl ServiceConfig {
    /// Reads `path` when given, then applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        let key = var(ENV_API_KEY);
        if let Some(url) = var(ENV_SUMMARIZER_URL) {
            endpoint(&mut self.summarizer, url, &key);
        }
        if let Some(url) = var(ENV_EMBEDDER_URL) {
            endpoint(&mut self.embedder, url, &key);
        }
        if let Some(url) = var(ENV_LLM_URL) {
            endpoint(&mut self.llm, url, &key);
        }
        if let Some(dir) = var(ENV_STORE) {
            self.store_dir = dir.into();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::InvalidArgument("embedding_dim must be >= 1".into()));
        }
        let mut probe = self.request_template();
        probe.query_text = "probe".into();
        probe.validate()
    }

    /// Retrieval request carrying the configured defaults and an empty query.
    pub fn request_template(&self) -> RetrievalRequest {
        let mut r = RetrievalRequest::new("", self.default_k);
        r.mode = self.default_mode;
        r.traversal = self.default_traversal.clone();
        r.budget_fraction = self.default_budget_fraction;
        r
    }
}
