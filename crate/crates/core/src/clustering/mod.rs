//! File clustering: embedding-based, Louvain and label propagation, with
//! misc grouping and cluster labels.

pub mod label_prop;
pub mod labels;
pub mod louvain;
pub mod projection;
pub mod reduce;
pub mod semantic;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use label_prop::{dominant_labels, label_propagation, label_propagation_restarts, label_propagation_run, PropagationOutcome};
pub use labels::{label_clusters, stub_label};
pub use louvain::{louvain, modularity, modularity_with_resolution, LouvainOutcome};
pub use projection::{file_features, project_files, FileFeatureView, FileGraph, WeightedGraph};
pub use semantic::{semantic_clusters, SemanticClustering, SemanticParams};

use crate::embedding::EmbeddingVector;
use crate::enrich::SummarizerProvider;
use crate::graph::{KnowledgeGraph, NodeId};
use crate::{Error, Result};

/// Reserved id of the misc cluster.
pub const MISC_CLUSTER: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    Semantic,
    Louvain,
    LabelPropagation,
}

impl std::str::FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "semantic" => Ok(Self::Semantic),
            "louvain" => Ok(Self::Louvain),
            "labelpropagation" | "lpa" => Ok(Self::LabelPropagation),
            other => Err(Error::InvalidArgument(format!("unknown clustering method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub method: ClusterMethod,
    pub seed: Option<u64>,
    pub clusters: BTreeMap<NodeId, u32>,
    /// In-scope files without a cluster.
    pub unassigned: BTreeSet<NodeId>,
    pub labels: BTreeMap<u32, Option<String>>,
    /// Modularity for the network methods, silhouette for semantic.
    pub score: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringQuality {
    /// Clusters other than misc.
    pub count: usize,
    /// Sizes of those clusters, largest first.
    pub sizes: Vec<usize>,
    /// Files in misc or without a cluster.
    pub unassigned: usize,
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub id: u32,
    pub label: Option<String>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub method: ClusterMethod,
    pub seed: Option<u64>,
    pub clusters: Vec<ClusterEntry>,
    pub quality: ClusteringQuality,
}

impl ClusterAssignment {
    /// Cluster ids are `label + 1`, keeping 0 free for misc.
    pub fn from_labels(method: ClusterMethod, seed: Option<u64>, files: &[NodeId], labels: &[usize], score: Option<f64>) -> Self {
        assert_eq!(files.len(), labels.len());
        Self {
            method,
            seed,
            clusters: files.iter().zip(labels).map(|(&f, &l)| (f, l as u32 + 1)).collect(),
            unassigned: BTreeSet::new(),
            labels: BTreeMap::new(),
            score,
            warnings: Vec::new(),
        }
    }

    pub fn members(&self) -> BTreeMap<u32, Vec<NodeId>> {
        let mut out: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for (&f, &c) in &self.clusters {
            out.entry(c).or_default().push(f);
        }
        out
    }

    pub fn quality(&self) -> ClusteringQuality {
        let members = self.members();
        let mut sizes: Vec<usize> = members.iter().filter(|(id, _)| **id != MISC_CLUSTER).map(|(_, m)| m.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        ClusteringQuality {
            count: sizes.len(),
            sizes,
            unassigned: members.get(&MISC_CLUSTER).map_or(0, Vec::len) + self.unassigned.len(),
            score: self.score,
        }
    }

    pub fn report(&self, graph: &KnowledgeGraph) -> ClusterReport {
        let clusters = self
            .members()
            .into_iter()
            .map(|(id, files)| {
                let mut files: Vec<String> = files.iter().filter_map(|f| graph.node(*f)).map(|n| n.path.clone()).collect();
                files.sort();
                ClusterEntry {
                    id,
                    label: self.labels.get(&id).cloned().flatten(),
                    files,
                }
            })
            .collect();
        ClusterReport {
            method: self.method,
            seed: self.seed,
            clusters,
            quality: self.quality(),
        }
    }
}

/// Moves unassigned files and clusters smaller than `min_size` into the misc
/// cluster. Other clusters keep their ids and members.
pub fn misc_group(assignment: &ClusterAssignment, min_size: usize) -> ClusterAssignment {
    let mut out = assignment.clone();
    let members = assignment.members();
    for (id, files) in &members {
        if *id != MISC_CLUSTER && files.len() < min_size {
            for f in files {
                out.clusters.insert(*f, MISC_CLUSTER);
            }
            out.labels.remove(id);
        }
    }
    for f in std::mem::take(&mut out.unassigned) {
        out.clusters.insert(f, MISC_CLUSTER);
    }
    out
}

pub fn louvain_clusters(projection: &FileGraph, resolution: f64) -> ClusterAssignment {
    let out = louvain(&projection.graph, resolution);
    ClusterAssignment::from_labels(ClusterMethod::Louvain, None, &projection.files, &out.labels, Some(out.modularity))
}

pub fn label_propagation_clusters(projection: &FileGraph, seed: u64) -> ClusterAssignment {
    let out = label_propagation(&projection.graph, seed);
    let q = modularity(&projection.graph, &out.labels);
    let mut a = ClusterAssignment::from_labels(ClusterMethod::LabelPropagation, Some(seed), &projection.files, &out.labels, Some(q));
    if !out.converged {
        a.warnings.push(format!("label propagation stopped after {} sweeps without converging", out.sweeps));
    }
    a
}

pub fn semantic_cluster(files: &[NodeId], embeddings: &[EmbeddingVector], params: &SemanticParams) -> Result<ClusterAssignment> {
    if files.len() != embeddings.len() {
        return Err(Error::InvalidArgument("one embedding per file is required".into()));
    }
    let out = semantic_clusters(embeddings, params)?;
    let mut a = ClusterAssignment::from_labels(ClusterMethod::Semantic, Some(params.seed), files, &out.labels, Some(out.score));
    a.warnings.extend(out.warning);
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub method: ClusterMethod,
    pub seed: u64,
    pub resolution: f64,
    pub min_size: usize,
    pub semantic: SemanticParams,
}

impl ClusterOptions {
    pub fn new(method: ClusterMethod) -> Self {
        Self {
            method,
            seed: 42,
            resolution: 1.0,
            min_size: 3,
            semantic: SemanticParams::default(),
        }
    }
}

/// Clusters every File of the graph, groups small clusters into misc and
/// labels the result.
pub fn cluster_files(
    graph: &KnowledgeGraph,
    options: &ClusterOptions,
    summarizer: Option<&dyn SummarizerProvider>,
) -> Result<ClusterAssignment> {
    let projection = project_files(graph);
    let assignment = match options.method {
        ClusterMethod::Louvain => louvain_clusters(&projection, options.resolution),
        ClusterMethod::LabelPropagation => label_propagation_clusters(&projection, options.seed),
        ClusterMethod::Semantic => {
            let mut files = Vec::new();
            let mut embeddings = Vec::new();
            let mut missing = BTreeSet::new();
            for &f in &projection.files {
                match graph.node(f).and_then(|n| n.search_embedding()) {
                    Some(e) => {
                        files.push(f);
                        embeddings.push(e.clone());
                    }
                    None => {
                        missing.insert(f);
                    }
                }
            }
            if files.is_empty() {
                return Err(Error::NotEnriched);
            }
            let mut params = options.semantic.clone();
            params.seed = options.seed;
            params.min_size = options.min_size;
            let mut a = if files.len() < 2 {
                ClusterAssignment::from_labels(ClusterMethod::Semantic, Some(options.seed), &files, &[0], None)
            } else {
                semantic_cluster(&files, &embeddings, &params)?
            };
            if !missing.is_empty() {
                a.warnings.push(format!("{} files without embeddings left unassigned", missing.len()));
            }
            a.unassigned = missing;
            a
        }
    };
    Ok(label_clusters(&misc_group(&assignment, options.min_size), graph, summarizer))
}
