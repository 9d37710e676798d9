use serde::{Deserialize, Serialize};

use super::reduce::{kmeans, reduce, silhouette, ReduceParams};
use crate::embedding::EmbeddingVector;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticParams {
    pub reduce: ReduceParams,
    pub k_min: usize,
    /// Upper end of the k sweep; the effective bound is also at most
    /// `ceil(n / 3)`.
    pub k_max: usize,
    /// Clusters smaller than this count as unassigned.
    pub min_size: usize,
    pub max_unassigned_fraction: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SemanticParams {
    fn default() -> Self {
        Self {
            reduce: ReduceParams::default(),
            k_min: 2,
            k_max: 40,
            min_size: 3,
            max_unassigned_fraction: 0.4,
            restarts: 4,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: usize,
    pub score: f64,
    pub clusters: usize,
    pub unassigned: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticClustering {
    /// Cluster index per input point.
    pub labels: Vec<usize>,
    pub score: f64,
    pub candidates: Vec<Candidate>,
    pub warning: Option<String>,
}

/// Reduces the embeddings, sweeps k-means over k, drops candidates that
/// are too fragmented or too coarse and keeps the best silhouette (ties go
/// to the smaller k).
pub fn semantic_clusters(embeddings: &[EmbeddingVector], params: &SemanticParams) -> Result<SemanticClustering> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::InvalidArgument("semantic clustering needs at least 2 files".into()));
    }
    if let Some(e) = embeddings.iter().find(|e| e.dim() != embeddings[0].dim()) {
        return Err(Error::DimensionMismatch {
            expected: embeddings[0].dim(),
            actual: e.dim(),
        });
    }
    let points: Vec<Vec<f64>> = embeddings.iter().map(|e| e.as_slice().iter().map(|&x| f64::from(x)).collect()).collect();
    let reduced = reduce(&points, &params.reduce, params.seed);
    let k_cap = params.k_max.min(n.div_ceil(3)).min(n);
    let mut candidates = Vec::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for k in params.k_min.max(2)..=k_cap {
        let km = kmeans(&reduced, k, params.restarts, params.seed ^ (k as u64).wrapping_mul(0x9e37_79b9));
        let mut sizes = vec![0usize; k];
        for &l in &km.labels {
            sizes[l] += 1;
        }
        let unassigned: usize = sizes.iter().filter(|&&s| s < params.min_size).sum();
        let kept = sizes.iter().filter(|&&s| s >= params.min_size).count();
        let score = silhouette(&reduced, &km.labels);
        let rejected = if kept < 2 {
            Some("fewer than 2 clusters of minimum size".to_string())
        } else if unassigned as f64 > params.max_unassigned_fraction * n as f64 {
            Some("too many unassigned files".to_string())
        } else {
            None
        };
        if rejected.is_none() && best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, km.labels));
        }
        candidates.push(Candidate {
            k,
            score,
            clusters: kept,
            unassigned,
            rejected,
        });
    }
    Ok(match best {
        Some((score, labels)) => SemanticClustering {
            labels,
            score,
            candidates,
            warning: None,
        },
        None => SemanticClustering {
            labels: vec![0; n],
            score: 0.0,
            candidates,
            warning: Some("semantic: every candidate was rejected; using a single cluster".into()),
        },
    })
}
