use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_BETA: f64 = 3.0;

fn hits<S: AsRef<str>>(retrieved: &[S], relevant: &BTreeSet<String>) -> usize {
    let mut seen = HashSet::new();
    retrieved
        .iter()
        .map(AsRef::as_ref)
        .filter(|p| relevant.contains(*p) && seen.insert(*p))
        .count()
}

fn need_relevant(relevant: &BTreeSet<String>) -> Result<()> {
    if relevant.is_empty() {
        return Err(Error::UndefinedMetric("recall needs at least one relevant file".into()));
    }
    Ok(())
}

fn need_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::UndefinedMetric("k must be >= 1".into()));
    }
    Ok(())
}

pub fn recall<S: AsRef<str>>(retrieved: &[S], relevant: &BTreeSet<String>) -> Result<f64> {
    need_relevant(relevant)?;
    Ok(hits(retrieved, relevant) as f64 / relevant.len() as f64)
}

pub fn precision<S: AsRef<str>>(retrieved: &[S], relevant: &BTreeSet<String>) -> Result<f64> {
    if retrieved.is_empty() {
        return Err(Error::UndefinedMetric("precision needs at least one retrieved file".into()));
    }
    Ok(hits(retrieved, relevant) as f64 / retrieved.len() as f64)
}

pub fn recall_at_k<S: AsRef<str>>(retrieved: &[S], relevant: &BTreeSet<String>, k: usize) -> Result<f64> {
    need_k(k)?;
    recall(&retrieved[..k.min(retrieved.len())], relevant)
}

/// Hits in the first `k` items over `k`; missing positions count as misses.
pub fn precision_at_k<S: AsRef<str>>(retrieved: &[S], relevant: &BTreeSet<String>, k: usize) -> Result<f64> {
    need_k(k)?;
    Ok(hits(&retrieved[..k.min(retrieved.len())], relevant) as f64 / k as f64)
}

/// Weighted harmonic mean of precision and recall; 0 when both are 0.
pub fn fbeta(precision: f64, recall: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::UndefinedMetric(format!("beta must be positive, got {beta}")));
    }
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    Ok(if denom == 0.0 { 0.0 } else { (1.0 + b2) * precision * recall / denom })
}

pub fn fbeta_at_k<S: AsRef<str>>(retrieved: &[S], relevant: &BTreeSet<String>, k: usize, beta: f64) -> Result<f64> {
    fbeta(precision_at_k(retrieved, relevant, k)?, recall_at_k(retrieved, relevant, k)?, beta)
}

/// Median; the mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub recall: f64,
    /// `None` when nothing was retrieved.
    pub precision: Option<f64>,
    pub recall_at_k: f64,
    pub precision_at_k: f64,
    pub fbeta_at_k: f64,
    pub k: usize,
    pub beta: f64,
    /// At least one relevant file in the top k.
    pub found: bool,
}

impl MetricRow {
    pub fn compute<S: AsRef<str>>(retrieved: &[S], relevant: &BTreeSet<String>, k: usize, beta: f64) -> Result<Self> {
        let recall_at_k = recall_at_k(retrieved, relevant, k)?;
        let precision_at_k = precision_at_k(retrieved, relevant, k)?;
        Ok(Self {
            recall: recall(retrieved, relevant)?,
            precision: precision(retrieved, relevant).ok(),
            recall_at_k,
            precision_at_k,
            fbeta_at_k: fbeta(precision_at_k, recall_at_k, beta)?,
            k,
            beta,
            found: recall_at_k > 0.0,
        })
    }
}
