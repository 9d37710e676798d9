//! Neighbor-graph embedding into a few dimensions, k-means and silhouette.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReduceParams {
    pub target_dim: usize,
    pub n_neighbors: usize,
    pub epochs: usize,
    pub negative_samples: usize,
    /// Curve parameters of the low-dimensional similarity `1 / (1 + a d^(2b))`
    /// (values for a minimum distance of 0.1).
    pub a: f64,
    pub b: f64,
}

impl Default for ReduceParams {
    fn default() -> Self {
        Self {
            target_dim: 8,
            n_neighbors: 15,
            epochs: 200,
            negative_samples: 5,
            a: 1.577,
            b: 0.8951,
        }
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fuzzy k-nearest-neighbor graph as `(i, j, weight)` with `i < j`.
fn fuzzy_graph(points: &[Vec<f64>], k: usize) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let knn: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, sq_dist(&points[i], &points[j]).sqrt()))
                .collect();
            d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            d.truncate(k);
            d
        })
        .collect();
    let target = (k as f64).log2().max(1e-3);
    let mut directed = std::collections::BTreeMap::new();
    for (i, nbrs) in knn.iter().enumerate() {
        let rho = nbrs.iter().map(|e| e.1).find(|&d| d > 0.0).unwrap_or(0.0);
        let total = |sigma: f64| -> f64 { nbrs.iter().map(|e| (-(e.1 - rho).max(0.0) / sigma).exp()).sum() };
        let (mut lo, mut hi) = (1e-8f64, 1e4f64);
        for _ in 0..64 {
            let mid = (lo * hi).sqrt();
            if total(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let sigma = (lo * hi).sqrt();
        for &(j, d) in nbrs {
            directed.insert((i, j), (-(d - rho).max(0.0) / sigma).exp());
        }
    }
    let mut out = Vec::new();
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or(0.0);
        if i < j || back == 0.0 {
            let sym = w + back - w * back;
            if sym > 0.0 {
                out.push((i.min(j), i.max(j), sym));
            }
        }
    }
    out
}

/// Low-dimensional layout preserving the fuzzy neighbor graph of `points`:
/// attraction along graph edges, sampled repulsion elsewhere, linearly
/// decaying learning rate. Deterministic for a given seed.
pub fn reduce(points: &[Vec<f64>], params: &ReduceParams, seed: u64) -> Vec<Vec<f64>> {
    let n = points.len();
    let dim = params.target_dim.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
    if n < 3 {
        return y;
    }
    let edges = fuzzy_graph(points, params.n_neighbors.min(n - 1).max(1));
    let max_w = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    if max_w == 0.0 {
        return y;
    }
    let every: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let mut next: Vec<f64> = every.clone();
    let (a, b) = (params.a, params.b);
    let clip = |g: f64| g.clamp(-4.0, 4.0);
    for epoch in 0..params.epochs {
        let lr = 1.0 - epoch as f64 / params.epochs as f64;
        for (e, &(i, j, _)) in edges.iter().enumerate() {
            if next[e] > (epoch + 1) as f64 {
                continue;
            }
            next[e] += every[e];
            for (src, dst) in [(i, j), (j, i)] {
                let d2 = sq_dist(&y[src], &y[dst]);
                let coef = if d2 > 0.0 {
                    -2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b))
                } else {
                    0.0
                };
                for t in 0..dim {
                    let g = clip(coef * (y[src][t] - y[dst][t])) * lr;
                    y[src][t] += g;
                }
                for _ in 0..params.negative_samples {
                    let other = rng.random_range(0..n);
                    if other == src {
                        continue;
                    }
                    let d2 = sq_dist(&y[src], &y[other]);
                    let coef = 2.0 * b / ((0.001 + d2) * (1.0 + a * d2.powf(b)));
                    for t in 0..dim {
                        let g = if d2 > 0.0 { clip(coef * (y[src][t] - y[other][t])) } else { 4.0 };
                        y[src][t] += g * lr;
                    }
                }
            }
        }
    }
    y
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub inertia: f64,
}

/// k-means++ seeding followed by Lloyd iterations; best of `restarts` runs
/// by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> KMeans {
    let n = points.len();
    assert!(k >= 1 && k <= n, "k must be in 1..=n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeans> = None;
    for _ in 0..restarts.max(1) {
        let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
        let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
        while centers.len() < k {
            let total: f64 = nearest.iter().sum();
            let pick = if total == 0.0 {
                rng.random_range(0..n)
            } else {
                let mut r = rng.random_range(0.0..total);
                let mut idx = n - 1;
                for (i, &d) in nearest.iter().enumerate() {
                    if r < d {
                        idx = i;
                        break;
                    }
                    r -= d;
                }
                idx
            };
            let center = points[pick].clone();
            for (i, p) in points.iter().enumerate() {
                nearest[i] = nearest[i].min(sq_dist(p, &center));
            }
            centers.push(center);
        }
        let mut labels = vec![0usize; n];
        for _ in 0..100 {
            let mut changed = false;
            for (i, p) in points.iter().enumerate() {
                let c = (0..k)
                    .min_by(|&x, &y| sq_dist(p, &centers[x]).total_cmp(&sq_dist(p, &centers[y])))
                    .unwrap_or(0);
                if labels[i] != c {
                    labels[i] = c;
                    changed = true;
                }
            }
            let dim = points[0].len();
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (p, &l) in points.iter().zip(&labels) {
                counts[l] += 1;
                for (s, v) in sums[l].iter_mut().zip(p) {
                    *s += v;
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                }
            }
            if !changed {
                break;
            }
        }
        let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KMeans { labels, inertia });
        }
    }
    best.expect("at least one restart")
}

/// Mean silhouette coefficient; points in singleton clusters score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    if n < 2 || k < 2 {
        return 0.0;
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            if sizes[labels[i]] <= 1 {
                return 0.0;
            }
            let mut sum = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sum[labels[j]] += sq_dist(&points[i], &points[j]).sqrt();
                }
            }
            let a = sum[labels[i]] / (sizes[labels[i]] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != labels[i] && sizes[c] > 0)
                .map(|c| sum[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .sum();
    total / n as f64
}
