//! Concept discovery: vocabulary filtering, K-Means and cluster pruning.

mod kmeans;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, KMeansConfig, KMeansFit};

use crate::activation_io::ActivationDataset;
use crate::corpus::TokenTable;
use crate::InstanceId;

pub const DEFAULT_K: usize = 350;
pub const DEFAULT_MAX_TOKEN_FREQ: usize = 15_000;
pub const DEFAULT_MAX_CLUSTER_SIZE: usize = 15_000;
pub const CLUSTERS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DiscoveryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{rows} rows cannot form {k} clusters")]
    TooFewRows { rows: usize, k: usize },
    #[error("activation row {0} has no token in the corpus token table")]
    UnknownRow(InstanceId),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = DiscoveryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub max_token_freq: usize,
    pub max_cluster_size: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        let km = KMeansConfig::default();
        Self {
            k: DEFAULT_K,
            seed: km.seed,
            max_iter: km.max_iter,
            tol: km.tol,
            max_token_freq: DEFAULT_MAX_TOKEN_FREQ,
            max_cluster_size: DEFAULT_MAX_CLUSTER_SIZE,
        }
    }
}

impl DiscoveryConfig {
    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            seed: self.seed,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

/// Rows kept after removing over-frequent token types.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VocabularyFilter {
    pub retained: Vec<usize>,
    /// Removed token text and its corpus frequency.
    pub removed: BTreeMap<String, usize>,
}

/// Drops every row whose token text occurs more than `max_token_freq` times
/// in the corpus. Whole token types go, not a capped sample of them.
pub fn filter_vocabulary(
    dataset: &ActivationDataset,
    tokens: &TokenTable,
    max_token_freq: usize,
) -> Result<VocabularyFilter> {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for r in tokens.iter() {
        *freq.entry(r.text.as_str()).or_insert(0) += 1;
    }
    let mut out = VocabularyFilter::default();
    for (i, id) in dataset.rows.iter().enumerate() {
        let text = tokens
            .text(id)
            .ok_or_else(|| DiscoveryError::UnknownRow(id.clone()))?;
        let f = freq[text];
        if f > max_token_freq {
            out.removed.insert(text.to_owned(), f);
        } else {
            out.retained.push(i);
        }
    }
    if out.retained.is_empty() {
        log::warn!("vocabulary filter removed every row (cap {max_token_freq})");
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub members: Vec<InstanceId>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SourceInfo {
    pub model_id: String,
    pub layer: u32,
}

/// Discovered clusters over token instances.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub config: DiscoveryConfig,
    pub source: SourceInfo,
    pub dim: usize,
    /// Kept clusters, ordered by id.
    pub clusters: Vec<Cluster>,
    /// Clusters set aside by [`prune_clusters`].
    pub pruned: Vec<Cluster>,
    /// `k x dim`, indexed by cluster id.
    pub centroids: Vec<f32>,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub removed_types: BTreeMap<String, usize>,
}

impl ClusterSet {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn centroid(&self, id: usize) -> &[f32] {
        &self.centroids[id * self.dim..(id + 1) * self.dim]
    }

    /// Every clustered instance, kept or pruned.
    pub fn instances(&self) -> BTreeSet<&InstanceId> {
        self.clusters
            .iter()
            .chain(&self.pruned)
            .flat_map(|c| &c.members)
            .collect()
    }

    pub fn cluster(&self, id: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.id == id)
    }

    /// Builds the set from a fit over `dataset.rows[retained[i]]`.
    pub fn from_fit(
        dataset: &ActivationDataset,
        retained: &[usize],
        fit: &KMeansFit,
        config: DiscoveryConfig,
    ) -> Self {
        let k = fit.k();
        let mut members: Vec<Vec<InstanceId>> = vec![Vec::new(); k];
        for (&row, &label) in retained.iter().zip(&fit.labels) {
            members[label].push(dataset.rows[row].clone());
        }
        let clusters = members
            .into_iter()
            .enumerate()
            .map(|(id, mut members)| {
                members.sort();
                Cluster { id, members }
            })
            .collect();
        Self {
            config,
            source: SourceInfo {
                model_id: dataset.manifest.model_id.clone(),
                layer: dataset.manifest.layer,
            },
            dim: fit.dim,
            clusters,
            pruned: Vec::new(),
            centroids: fit.centroids.iter().map(|&v| v as f32).collect(),
            sse: fit.sse(),
            iterations: fit.iterations(),
            converged: fit.converged,
            removed_types: BTreeMap::new(),
        }
    }
}

/// Moves clusters with more than `max_cluster_size` members to `pruned`.
pub fn prune_clusters(mut cs: ClusterSet, max_cluster_size: usize) -> ClusterSet {
    let (keep, drop): (Vec<_>, Vec<_>) = cs
        .clusters
        .into_iter()
        .partition(|c| c.len() <= max_cluster_size);
    cs.clusters = keep;
    cs.pruned.extend(drop);
    cs.pruned.sort_by_key(|c| c.id);
    cs.config.max_cluster_size = max_cluster_size;
    cs
}

/// Filter, cluster and prune in one go.
pub fn discover(
    dataset: &ActivationDataset,
    tokens: &TokenTable,
    config: DiscoveryConfig,
) -> Result<ClusterSet> {
    let filter = filter_vocabulary(dataset, tokens, config.max_token_freq)?;
    let d = dataset.dim();
    let mut data = Vec::with_capacity(filter.retained.len() * d);
    for &row in &filter.retained {
        data.extend_from_slice(dataset.row(row));
    }
    let fit = kmeans(&data, d, &config.kmeans())?;
    let mut cs = ClusterSet::from_fit(dataset, &filter.retained, &fit, config);
    cs.removed_types = filter.removed;
    Ok(prune_clusters(cs, config.max_cluster_size))
}

#[derive(Serialize, Deserialize)]
struct CentroidBlock {
    dtype: String,
    byte_order: String,
    shape: [usize; 2],
    data: String,
}

#[derive(Serialize, Deserialize)]
struct ClusterFile {
    format_version: u32,
    config: DiscoveryConfig,
    source: SourceInfo,
    sse: f64,
    iterations: usize,
    converged: bool,
    removed_types: BTreeMap<String, usize>,
    clusters: Vec<Cluster>,
    pruned: Vec<Cluster>,
    centroids: CentroidBlock,
}

pub fn write_clusters(cs: &ClusterSet, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = cs.centroids.iter().flat_map(|v| v.to_le_bytes()).collect();
    let file = ClusterFile {
        format_version: CLUSTERS_FORMAT_VERSION,
        config: cs.config,
        source: cs.source.clone(),
        sse: cs.sse,
        iterations: cs.iterations,
        converged: cs.converged,
        removed_types: cs.removed_types.clone(),
        clusters: cs.clusters.clone(),
        pruned: cs.pruned.clone(),
        centroids: CentroidBlock {
            dtype: "f32".into(),
            byte_order: "little".into(),
            shape: [cs.centroids.len() / cs.dim.max(1), cs.dim],
            data: BASE64.encode(bytes),
        },
    };
    let mut text = serde_json::to_string(&file).expect("cluster file serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| DiscoveryError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_clusters(path: &Path) -> Result<ClusterSet> {
    let format = |message: String| DiscoveryError::Format {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|source| DiscoveryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ClusterFile = serde_json::from_str(&text).map_err(|e| format(e.to_string()))?;
    if file.format_version != CLUSTERS_FORMAT_VERSION {
        return Err(format(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let block = &file.centroids;
    if block.dtype != "f32" || block.byte_order != "little" {
        return Err(format("centroids must be little-endian f32".into()));
    }
    let bytes = BASE64
        .decode(&block.data)
        .map_err(|e| format(format!("centroid block: {e}")))?;
    let [rows, dim] = block.shape;
    if bytes.len() != rows * dim * 4 {
        return Err(format(format!(
            "centroid block holds {} bytes, shape needs {}",
            bytes.len(),
            rows * dim * 4
        )));
    }
    let centroids = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(ClusterSet {
        config: file.config,
        source: file.source,
        dim,
        clusters: file.clusters,
        pruned: file.pruned,
        centroids,
        sse: file.sse,
        iterations: file.iterations,
        converged: file.converged,
        removed_types: file.removed_types,
    })
}
