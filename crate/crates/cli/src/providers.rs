use std::sync::Arc;

use repograph_core::enrich::{
    fingerprint, is_stub_fingerprint, EmbedderProvider, HttpEmbedder, HttpSummarizer, StubEmbedder, StubSummarizer, SummarizerProvider,
};
use repograph_core::retrieval::{HttpQueryProvider, Providers};

use crate::config::ServiceConfig;

/// Source tag for generated text in responses.
pub const LLM_SUGGESTED: &str = "llm-suggested";
pub const STUB_GENERATED: &str = "stub";

pub fn text_source(provider_fingerprint: &str) -> &'static str {
    if is_stub_fingerprint(provider_fingerprint) {
        STUB_GENERATED
    } else {
        LLM_SUGGESTED
    }
}

#[derive(Clone)]
pub struct ProviderSet {
    pub summarizer: Arc<dyn SummarizerProvider>,
    embedder: Option<Arc<dyn EmbedderProvider>>,
    pub llm: Option<Arc<HttpQueryProvider>>,
    default_dim: usize,
}

impl ProviderSet {
    pub fn from_config(cfg: &ServiceConfig) -> Self {
        let summarizer: Arc<dyn SummarizerProvider> = match &cfg.summarizer {
            Some(c) => Arc::new(HttpSummarizer::new(c.clone())),
            None => Arc::new(StubSummarizer),
        };
        let embedder = cfg
            .embedder
            .as_ref()
            .map(|c| Arc::new(HttpEmbedder::new(c.clone(), cfg.embedding_dim)) as Arc<dyn EmbedderProvider>);
        Self {
            summarizer,
            embedder,
            llm: cfg.llm.as_ref().map(|c| Arc::new(HttpQueryProvider::new(c.clone()))),
            default_dim: cfg.embedding_dim,
        }
    }

    /// Providers with the LLM stages switched off.
    pub fn without_llm(mut self) -> Self {
        self.llm = None;
        self
    }

    /// The configured embedder, or a stub of the requested dimension so that
    /// stub-built graphs of any dimension stay searchable.
    pub fn embedder(&self, dim: Option<usize>) -> Arc<dyn EmbedderProvider> {
        match &self.embedder {
            Some(e) => e.clone(),
            None => Arc::new(StubEmbedder {
                dim: dim.unwrap_or(self.default_dim),
                seed: 0,
            }),
        }
    }

    pub fn fingerprint(&self, dim: Option<usize>) -> String {
        fingerprint(self.summarizer.as_ref(), self.embedder(dim).as_ref())
    }

    pub fn retrieval<'a>(&'a self, embedder: &'a dyn EmbedderProvider) -> Providers<'a> {
        Providers {
            embedder,
            preprocessor: self.llm.as_deref().map(|p| p as _),
            suggester: self.llm.as_deref().map(|p| p as _),
        }
    }
}
