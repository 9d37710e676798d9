use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::enrich::prompt::{discovery_prompt, preprocess_prompt};
use crate::enrich::{EmbedderProvider, HttpProviderConfig, HttpSummarizer};
use crate::{Error, Result};

pub const CONCAT_SEPARATOR: &str = "\n---\n";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessMode {
    #[default]
    None,
    Llm,
    ConcatLlm,
    SelectiveLlm,
}

impl PreprocessMode {
    pub fn uses_provider(self) -> bool {
        self != PreprocessMode::None
    }
}

impl std::str::FromStr for PreprocessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "none" | "raw" => Ok(Self::None),
            "llm" => Ok(Self::Llm),
            "concatllm" | "concat" => Ok(Self::ConcatLlm),
            "selectivellm" | "selective" => Ok(Self::SelectiveLlm),
            other => Err(Error::InvalidArgument(format!("unknown preprocess mode `{other}`"))),
        }
    }
}

/// Rewrites an issue into text closer to code descriptions.
pub trait QueryPreprocessor: Send + Sync {
    fn identity(&self) -> String;
    fn preprocess(&self, query: &str) -> Result<String>;
}

/// Suggests repository paths an issue refers to.
pub trait FileSuggester: Send + Sync {
    fn suggest(&self, query: &str, candidates: &[String]) -> Result<Vec<String>>;
}

/// Prefixes the query with `NORMALIZED:`.
#[derive(Clone, Copy, Debug, Default)]
pub struct EchoPreprocessor;

impl QueryPreprocessor for EchoPreprocessor {
    fn identity(&self) -> String {
        "echo-preprocessor/1".into()
    }

    fn preprocess(&self, query: &str) -> Result<String> {
        Ok(format!("NORMALIZED:{query}"))
    }
}

/// Preprocessing and discovery through the summarize route of an HTTP
/// provider.
#[derive(Clone, Debug)]
pub struct HttpQueryProvider {
    inner: HttpSummarizer,
    base_url: String,
}

impl HttpQueryProvider {
    pub fn new(config: HttpProviderConfig) -> Self {
        Self {
            base_url: config.base_url.clone(),
            inner: HttpSummarizer::new(config),
        }
    }
}

impl QueryPreprocessor for HttpQueryProvider {
    fn identity(&self) -> String {
        format!("http:{}", self.base_url)
    }

    fn preprocess(&self, query: &str) -> Result<String> {
        let text = self.inner.complete("query", "issue", query, &preprocess_prompt(query))?;
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Provider("empty preprocessing answer".into()));
        }
        Ok(text.to_string())
    }
}

impl FileSuggester for HttpQueryProvider {
    fn suggest(&self, query: &str, candidates: &[String]) -> Result<Vec<String>> {
        let answer = self
            .inner
            .complete("discovery", "issue", query, &discovery_prompt(query, candidates))?;
        Ok(answer
            .lines()
            .map(|l| l.trim().trim_start_matches(['-', '*', ' ']).trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect())
    }
}

/// Query texts and their embeddings, in matching order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryBundle {
    pub raw_text: String,
    pub preprocessed_text: Option<String>,
    pub texts: Vec<String>,
    pub embeddings: Vec<EmbeddingVector>,
    pub mode: PreprocessMode,
    pub warnings: Vec<String>,
}

/// Builds the query texts for `mode` and embeds them. Provider failures in
/// the LLM modes fall back to the raw text with a warning.
pub fn preprocess_query(
    query: &str,
    mode: PreprocessMode,
    preprocessor: Option<&dyn QueryPreprocessor>,
    embedder: &dyn EmbedderProvider,
) -> Result<QueryBundle> {
    if query.trim().is_empty() {
        return Err(Error::InvalidArgument("query must not be empty".into()));
    }
    let mut warnings = Vec::new();
    let mut effective = mode;
    let mut pre = None;
    if mode.uses_provider() {
        match preprocessor.map(|p| p.preprocess(query)) {
            Some(Ok(text)) => pre = Some(text),
            Some(Err(e)) => {
                warnings.push(format!("preprocess: {e}; using raw query"));
                effective = PreprocessMode::None;
            }
            None => {
                warnings.push("preprocess: no provider configured; using raw query".into());
                effective = PreprocessMode::None;
            }
        }
    }
    let texts = match (effective, &pre) {
        (PreprocessMode::Llm, Some(p)) => vec![p.clone()],
        (PreprocessMode::ConcatLlm, Some(p)) => vec![format!("{p}{CONCAT_SEPARATOR}{query}")],
        (PreprocessMode::SelectiveLlm, Some(p)) => vec![query.to_string(), p.clone()],
        _ => vec![query.to_string()],
    };
    let embeddings = embedder.embed(&texts)?;
    if embeddings.len() != texts.len() {
        return Err(Error::Provider(format!(
            "embedder returned {} vectors for {} texts",
            embeddings.len(),
            texts.len()
        )));
    }
    Ok(QueryBundle {
        raw_text: query.to_string(),
        preprocessed_text: pre,
        texts,
        embeddings,
        mode: effective,
        warnings,
    })
}
