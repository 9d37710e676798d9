use super::projection::WeightedGraph;

const EPS: f64 = 1e-12;

/// Newman modularity of `labels` (one community label per node).
pub fn modularity(g: &WeightedGraph, labels: &[usize]) -> f64 {
    modularity_with_resolution(g, labels, 1.0)
}

pub fn modularity_with_resolution(g: &WeightedGraph, labels: &[usize], resolution: f64) -> f64 {
    assert_eq!(labels.len(), g.len(), "labels must cover every node");
    let two_m = g.total_weight();
    if two_m == 0.0 {
        return 0.0;
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for i in 0..g.len() {
        let c = labels[i];
        tot[c] += g.degree(i);
        inside[c] += g.self_loop(i);
        for &(j, w) in g.neighbors(i) {
            if labels[j] == c {
                inside[c] += w;
            }
        }
    }
    inside
        .iter()
        .zip(&tot)
        .map(|(&a, &t)| a / two_m - resolution * (t / two_m).powi(2))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LouvainOutcome {
    /// Community per node, numbered by first occurrence.
    pub labels: Vec<usize>,
    pub modularity: f64,
    /// Modularity on the input graph after each level, then after the final
    /// single-node refinement.
    pub level_modularity: Vec<f64>,
}

/// Moves single nodes between communities while that strictly raises
/// modularity. Nodes are visited in index order; ties keep the current
/// community, then prefer the lowest community id.
fn local_moving(g: &WeightedGraph, labels: &mut [usize], resolution: f64) -> bool {
    let n = g.len();
    let two_m = g.total_weight();
    if two_m == 0.0 {
        return false;
    }
    let degree: Vec<f64> = (0..n).map(|i| g.degree(i)).collect();
    let mut tot = vec![0.0; n];
    let mut size = vec![0usize; n];
    for i in 0..n {
        tot[labels[i]] += degree[i];
        size[labels[i]] += 1;
    }
    let mut links: Vec<f64> = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any = false;
    loop {
        let mut moved = false;
        for i in 0..n {
            let own = labels[i];
            let ki = degree[i];
            for &(j, w) in g.neighbors(i) {
                let c = labels[j];
                if !seen[c] {
                    seen[c] = true;
                    touched.push(c);
                }
                links[c] += w;
            }
            tot[own] -= ki;
            size[own] -= 1;
            let gain = |c: usize, links: &[f64]| links[c] - resolution * tot[c] * ki / two_m;
            let mut best = own;
            let mut best_gain = gain(own, &links);
            touched.sort_unstable();
            for &c in &touched {
                let gc = gain(c, &links);
                if c != own && gc > best_gain + EPS {
                    best = c;
                    best_gain = gc;
                }
            }
            // Leaving for an empty community has gain 0.
            if best_gain < -EPS {
                if size[own] == 0 {
                    best = own;
                } else if let Some(empty) = (0..n).find(|&c| size[c] == 0) {
                    best = empty;
                }
            }
            for &c in &touched {
                links[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
            tot[best] += ki;
            size[best] += 1;
            if best != own {
                labels[i] = best;
                moved = true;
                any = true;
            }
        }
        if !moved {
            return any;
        }
    }
}

fn renumber(labels: &mut [usize]) -> usize {
    let mut map = std::collections::HashMap::new();
    for l in labels.iter_mut() {
        let next = map.len();
        *l = *map.entry(*l).or_insert(next);
    }
    map.len()
}

fn aggregate(g: &WeightedGraph, labels: &[usize], k: usize) -> WeightedGraph {
    let mut adj: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
    let mut self_loops = vec![0.0; k];
    for i in 0..g.len() {
        let ci = labels[i];
        self_loops[ci] += g.self_loop(i);
        for &(j, w) in g.neighbors(i) {
            let cj = labels[j];
            if ci == cj {
                self_loops[ci] += w;
            } else {
                *adj[ci].entry(cj).or_default() += w;
            }
        }
    }
    WeightedGraph::from_parts(adj.into_iter().map(|m| m.into_iter().collect()).collect(), self_loops)
}

/// Two-phase Louvain: local moving, then aggregation of communities into
/// weighted super-nodes, repeated until a level changes nothing. A final
/// pass of single-node moves on the input graph makes the result a local
/// optimum there as well.
pub fn louvain(g: &WeightedGraph, resolution: f64) -> LouvainOutcome {
    let n = g.len();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level_modularity = Vec::new();
    let mut level = g.clone();
    loop {
        let mut labels: Vec<usize> = (0..level.len()).collect();
        let moved = local_moving(&level, &mut labels, resolution);
        let k = renumber(&mut labels);
        for m in membership.iter_mut() {
            *m = labels[*m];
        }
        level_modularity.push(modularity_with_resolution(g, &membership, resolution));
        if !moved || k == level.len() {
            break;
        }
        level = aggregate(&level, &labels, k);
    }
    local_moving(g, &mut membership, resolution);
    renumber(&mut membership);
    let q = modularity_with_resolution(g, &membership, resolution);
    level_modularity.push(q);
    LouvainOutcome {
        labels: membership,
        modularity: q,
        level_modularity,
    }
}
