//! HTTP JSON providers.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{EmbedderProvider, SummarizerProvider, SummaryRequest};
use crate::embedding::EmbeddingVector;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpProviderConfig {
    pub base_url: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    2
}

impl HttpProviderConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
            api_key: None,
        }
    }
}

/// Blocking JSON client with retries.
#[derive(Clone, Debug)]
pub struct ProviderClient {
    config: HttpProviderConfig,
    agent: ureq::Agent,
}

impl ProviderClient {
    pub fn new(config: HttpProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        Self { config, agent }
    }

    pub fn base_url(&self) -> &str {
        &self.config.base_url
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, route: &str, body: &Req) -> Result<Resp> {
        let url = format!("{}{route}", self.config.base_url.trim_end_matches('/'));
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50 * (1 << attempt.min(6))));
            }
            let mut req = self.agent.post(&url);
            if let Some(key) = &self.config.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            match req.send_json(body) {
                Ok(mut resp) => match resp.body_mut().read_json::<Resp>() {
                    Ok(v) => return Ok(v),
                    Err(e) => last = format!("bad response from {url}: {e}"),
                },
                Err(e) => last = format!("{url}: {e}"),
            }
        }
        Err(Error::Provider(format!(
            "{last} (after {} attempts)",
            self.config.retries + 1
        )))
    }
}

#[derive(Serialize)]
struct SummarizeBody<'a> {
    kind: &'a str,
    name: &'a str,
    docstring: Option<&'a str>,
    content: Option<&'a str>,
    context: &'a str,
}

#[derive(Deserialize)]
struct SummarizeReply {
    description: String,
}

#[derive(Clone, Debug)]
pub struct HttpSummarizer {
    client: ProviderClient,
}

impl HttpSummarizer {
    pub fn new(config: HttpProviderConfig) -> Self {
        Self {
            client: ProviderClient::new(config),
        }
    }

    /// Sends a free-form request through the summarize route; used by the
    /// query preprocessing and discovery stages.
    pub fn complete(&self, kind: &str, name: &str, content: &str, context: &str) -> Result<String> {
        let reply: SummarizeReply = self.client.post(
            "/v1/summarize",
            &SummarizeBody {
                kind,
                name,
                docstring: None,
                content: Some(content),
                context,
            },
        )?;
        Ok(reply.description)
    }
}

impl SummarizerProvider for HttpSummarizer {
    fn identity(&self) -> String {
        format!("http:{}", self.client.base_url())
    }

    fn summarize(&self, req: &SummaryRequest) -> Result<String> {
        let reply: SummarizeReply = self.client.post(
            "/v1/summarize",
            &SummarizeBody {
                kind: req.kind.as_str(),
                name: &req.name,
                docstring: req.docstring.as_deref(),
                content: req.content.as_deref(),
                context: &req.context,
            },
        )?;
        let text = reply.description.trim().to_string();
        if text.is_empty() {
            return Err(Error::Provider("empty description".into()));
        }
        Ok(text)
    }
}

#[derive(Serialize)]
struct EmbedBody<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedReply {
    vectors: Vec<Vec<f32>>,
    dim: usize,
}

#[derive(Clone, Debug)]
pub struct HttpEmbedder {
    client: ProviderClient,
    dim: usize,
}

impl HttpEmbedder {
    pub fn new(config: HttpProviderConfig, dim: usize) -> Self {
        Self {
            client: ProviderClient::new(config),
            dim,
        }
    }
}

impl EmbedderProvider for HttpEmbedder {
    fn identity(&self) -> String {
        format!("http:{}/d{}", self.client.base_url(), self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let reply: EmbedReply = self.client.post("/v1/embed", &EmbedBody { texts })?;
        if reply.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: reply.dim,
            });
        }
        if reply.vectors.len() != texts.len() {
            return Err(Error::Provider(format!(
                "asked for {} vectors, got {}",
                texts.len(),
                reply.vectors.len()
            )));
        }
        reply
            .vectors
            .iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        actual: v.len(),
                    });
                }
                EmbeddingVector::normalized(v)
            })
            .collect()
    }
}
