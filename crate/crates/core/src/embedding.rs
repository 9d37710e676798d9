use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Norm tolerance accepted for vectors that claim to be unit length.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// A unit-length embedding stored as 32-bit floats.
///
/// Construction normalizes (or checks) the L2 norm so that cosine similarity
/// between two stored vectors reduces to a dot product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// L2-normalizes `values`. All-zero and non-finite inputs are rejected.
    pub fn normalized(values: &[f32]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidEmbedding("empty vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding("non-finite component".into()));
        }
        let norm = values
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidEmbedding("all-zero vector".into()));
        }
        Ok(Self(
            values
                .iter()
                .map(|&v| (f64::from(v) / norm) as f32)
                .collect(),
        ))
    }

    /// Same as [`normalized`](Self::normalized) for `f64` input.
    pub fn normalized_f64(values: &[f64]) -> Result<Self> {
        let narrowed: Vec<f32> = values.iter().map(|&v| v as f32).collect();
        Self::normalized(&narrowed)
    }

    /// Wraps already-normalized values without rescaling them, so persisted
    /// vectors load back bit-for-bit.
    pub fn from_unit(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding("empty or non-finite vector".into()));
        }
        let norm = values
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt();
        if (norm - 1.0).abs() > 1e-4 {
            return Err(Error::InvalidEmbedding(format!(
                "stored vector is not unit length (norm {norm})"
            )));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    /// Dot product in f64. Equals cosine similarity for two stored vectors.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| f64::from(a) * f64::from(b))
            .sum())
    }

    /// Little-endian f32 bytes, used by the compact snapshot encoding.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.0.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() % 4 != 0 {
            return Err(Error::InvalidEmbedding(format!(
                "byte length {} is not a multiple of 4",
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::from_unit(values)
    }
}
