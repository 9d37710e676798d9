use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::louvain::modularity;
use super::projection::WeightedGraph;

pub const MAX_SWEEPS: usize = 100;
/// Independent seeded runs per call; the highest-modularity run is kept.
pub const DEFAULT_RESTARTS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationOutcome {
    /// Label per node, numbered by first occurrence.
    pub labels: Vec<usize>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Labels with the highest total edge weight among `i`'s neighbors, sorted.
pub fn dominant_labels(g: &WeightedGraph, labels: &[usize], i: usize) -> Vec<usize> {
    let mut weights: Vec<(usize, f64)> = Vec::new();
    for &(j, w) in g.neighbors(i) {
        match weights.iter_mut().find(|(l, _)| *l == labels[j]) {
            Some(e) => e.1 += w,
            None => weights.push((labels[j], w)),
        }
    }
    let Some(best) = weights.iter().map(|e| e.1).reduce(f64::max) else {
        return Vec::new();
    };
    let mut out: Vec<usize> = weights.into_iter().filter(|e| e.1 == best).map(|e| e.0).collect();
    out.sort_unstable();
    out
}

/// Best of [`DEFAULT_RESTARTS`] runs of [`label_propagation_run`] by
/// modularity, with run seeds derived from `seed`. Ties keep the earlier run.
pub fn label_propagation(g: &WeightedGraph, seed: u64) -> PropagationOutcome {
    label_propagation_restarts(g, seed, DEFAULT_RESTARTS)
}

pub fn label_propagation_restarts(g: &WeightedGraph, seed: u64, restarts: usize) -> PropagationOutcome {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, PropagationOutcome)> = None;
    for _ in 0..restarts.max(1) {
        let out = label_propagation_run(g, seeds.random());
        let q = modularity(g, &out.labels);
        if best.as_ref().is_none_or(|b| q > b.0) {
            best = Some((q, out));
        }
    }
    best.expect("at least one run").1
}

/// One asynchronous label propagation run. Each sweep visits nodes in a
/// seeded random order; a node keeps its label when it is already among the
/// dominant ones, otherwise picks one of them with the seeded generator.
pub fn label_propagation_run(g: &WeightedGraph, seed: u64) -> PropagationOutcome {
    let n = g.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut changed = false;
        for &i in &order {
            let best = dominant_labels(g, &labels, i);
            if best.is_empty() || best.contains(&labels[i]) {
                continue;
            }
            labels[i] = best[rng.random_range(0..best.len())];
            changed = true;
        }
        if !changed {
            converged = true;
            break;
        }
    }
    let mut map = std::collections::HashMap::new();
    for l in labels.iter_mut() {
        let next = map.len();
        *l = *map.entry(*l).or_insert(next);
    }
    PropagationOutcome {
        labels,
        sweeps,
        converged,
    }
}
