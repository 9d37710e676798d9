use crate::embedding::EmbeddingVector;
use crate::{Error, Result};

/// Cosine similarity of two equal-length, non-zero vectors.
pub fn cosine_similarity<T: Copy + Into<f64>>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.into(), y.into());
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidEmbedding("zero vector has no direction".into()));
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Similarity of stored unit vectors (their dot product).
pub fn unit_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    a.dot(b)
}
