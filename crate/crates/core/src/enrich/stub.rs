//! Deterministic offline providers.

use sha2::{Digest, Sha256};

use super::{EmbedderProvider, SummarizerProvider, SummaryRequest};
use crate::embedding::EmbeddingVector;
use crate::{Error, Result};

pub const DEFAULT_STUB_DIM: usize = 256;

/// First sentence of the docstring, else `"{kind} {name} at {path}"`.
pub fn stub_summarize(req: &SummaryRequest) -> String {
    if let Some(sentence) = req.docstring.as_deref().and_then(first_sentence) {
        return sentence;
    }
    format!("{} {} at {}", req.kind, req.name, req.path)
}

fn first_sentence(doc: &str) -> Option<String> {
    let para = doc.trim().split("\n\n").next()?.split_whitespace().collect::<Vec<_>>().join(" ");
    if para.is_empty() {
        return None;
    }
    let bytes = para.as_bytes();
    for (i, c) in para.char_indices() {
        if matches!(c, '.' | '!' | '?') && bytes.get(i + 1).is_none_or(|b| b.is_ascii_whitespace()) {
            return Some(para[..=i].to_string());
        }
    }
    Some(para)
}

/// Lowercased alphanumeric runs.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Bag of hashed tokens: each token adds 1 to bucket
/// `SHA-256(seed || token) mod dim`; the result is L2-normalized.
pub fn stub_embed(text: &str, dim: usize, seed: u64) -> Result<EmbeddingVector> {
    if dim == 0 {
        return Err(Error::InvalidArgument("embedding dim must be positive".into()));
    }
    let mut v = vec![0f64; dim];
    let mut any = false;
    for tok in tokens(text) {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update(tok.as_bytes());
        let digest = h.finalize();
        let bucket = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")) % dim as u64;
        v[bucket as usize] += 1.0;
        any = true;
    }
    if !any {
        return Err(Error::InvalidArgument("cannot embed empty text".into()));
    }
    EmbeddingVector::normalized_f64(&v)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StubSummarizer;

impl SummarizerProvider for StubSummarizer {
    fn identity(&self) -> String {
        "stub-summarizer/1".into()
    }

    fn summarize(&self, req: &SummaryRequest) -> Result<String> {
        Ok(stub_summarize(req))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StubEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for StubEmbedder {
    fn default() -> Self {
        Self {
            dim: DEFAULT_STUB_DIM,
            seed: 0,
        }
    }
}

impl EmbedderProvider for StubEmbedder {
    fn identity(&self) -> String {
        format!("stub-embedder/1/d{}/s{}", self.dim, self.seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| stub_embed(t, self.dim, self.seed)).collect()
    }
}

/// True for fingerprints produced by the stub providers.
pub fn is_stub_fingerprint(fingerprint: &str) -> bool {
    !fingerprint.is_empty() && fingerprint.split('+').all(|p| p.starts_with("stub-"))
}
