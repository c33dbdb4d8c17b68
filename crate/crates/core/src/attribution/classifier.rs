//! Multinomial logistic regression from activation vectors to cluster ids.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AttributionError, Result};
use crate::activation_io::ActivationDataset;
use crate::discovery::{ClusterSet, SourceInfo};

pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

/// Rows per partial-gradient chunk. Partial sums are combined in chunk
/// order, so results do not depend on the size of the thread pool.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    /// Training stops once the loss changes by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2: 1e-4,
            max_epochs: 2000,
            tol: 1e-7,
            seed: 42,
        }
    }
}

/// Feature standardization applied before the linear layer: every input is
/// centred on `mean` and divided by the single scalar `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub scale: f64,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: 1.0,
        }
    }

    /// Per-dimension mean and the root-mean-square norm of the centred rows.
    pub fn fit(x: &[f64], dim: usize) -> Self {
        let n = x.len() / dim;
        if n == 0 {
            return Self::identity(dim);
        }
        let mut mean = vec![0.0; dim];
        for row in x.chunks_exact(dim) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let sq: f64 = x
            .chunks_exact(dim)
            .map(|row| row.iter().zip(&mean).map(|(v, m)| (v - m).powi(2)).sum::<f64>())
            .sum();
        let rms = (sq / n as f64).sqrt();
        Self {
            mean,
            scale: if rms > 0.0 && rms.is_finite() { rms } else { 1.0 },
        }
    }

    fn apply(&self, row: &[f64], out: &mut [f64]) {
        for ((o, v), m) in out.iter_mut().zip(row).zip(&self.mean) {
            *o = (v - m) / self.scale;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptClassifier {
    /// Class `c` predicts `cluster_ids[c]`; ids are strictly increasing.
    pub cluster_ids: Vec<usize>,
    pub dim: usize,
    /// `k x dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub normalization: Normalization,
    pub config: TrainConfig,
    pub source: SourceInfo,
    pub epochs: usize,
    pub loss_history: Vec<f64>,
    /// Training accuracy before each update, aligned with `loss_history`.
    pub accuracy_history: Vec<f64>,
    pub train_accuracy: f64,
}

impl ConceptClassifier {
    /// A classifier with the given parameters and no input normalization.
    pub fn from_parameters(
        cluster_ids: Vec<usize>,
        dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let k = cluster_ids.len();
        if k < 2 {
            return Err(AttributionError::TooFewClusters(k));
        }
        if !cluster_ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(AttributionError::Invalid(
                "cluster ids must be strictly increasing".into(),
            ));
        }
        if weights.len() != k * dim || bias.len() != k {
            return Err(AttributionError::Invalid(format!(
                "parameter shapes {}+{} do not fit k={k}, dim={dim}",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            cluster_ids,
            dim,
            weights,
            bias,
            normalization: Normalization::identity(dim),
            config: TrainConfig::default(),
            source: SourceInfo::default(),
            epochs: 0,
            loss_history: Vec::new(),
            accuracy_history: Vec::new(),
            train_accuracy: 0.0,
        })
    }

    pub fn k(&self) -> usize {
        self.cluster_ids.len()
    }

    /// Softmax probabilities over classes, in `cluster_ids` order.
    pub fn probabilities(&self, activation: &[f32]) -> Result<Vec<f64>> {
        if activation.len() != self.dim {
            return Err(AttributionError::Dimension {
                expected: self.dim,
                actual: activation.len(),
            });
        }
        let raw: Vec<f64> = activation.iter().map(|&v| v as f64).collect();
        let mut x = vec![0.0; self.dim];
        self.normalization.apply(&raw, &mut x);
        let mut p = vec![0.0; self.k()];
        logits(&self.weights, &self.bias, &x, &mut p);
        softmax(&mut p);
        Ok(p)
    }

    /// The most probable cluster id (lower id on ties) and the full
    /// distribution.
    pub fn predict_concept(&self, activation: &[f32]) -> Result<(usize, Vec<f64>)> {
        let p = self.probabilities(activation)?;
        let best = argmax(&p);
        Ok((self.cluster_ids[best], p))
    }

    /// Writes a JSON manifest at `path` and the parameter block beside it.
    ///
    /// The block is little-endian f32 in the order weights (`k x dim`),
    /// bias (`k`), mean (`dim`), scale (1).
    pub fn save(&self, path: &Path) -> Result<()> {
        let block_name = format!(
            "{}.params.f32",
            path.file_stem().and_then(|s| s.to_str()).unwrap_or("classifier")
        );
        let manifest = ClassifierManifest {
            format_version: CLASSIFIER_FORMAT_VERSION,
            cluster_ids: self.cluster_ids.clone(),
            dim: self.dim,
            config: self.config,
            source: self.source.clone(),
            epochs: self.epochs,
            final_loss: self.loss_history.last().copied(),
            train_accuracy: self.train_accuracy,
            dtype: "f32".into(),
            byte_order: "little".into(),
            params_file: block_name.clone(),
        };
        let values = self
            .weights
            .iter()
            .chain(&self.bias)
            .chain(&self.normalization.mean)
            .chain(std::iter::once(&self.normalization.scale));
        let bytes: Vec<u8> = values.flat_map(|&v| (v as f32).to_le_bytes()).collect();
        let block_path = path.with_file_name(&block_name);
        fs::write(&block_path, bytes).map_err(AttributionError::io(&block_path))?;
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(AttributionError::io(path))
    }

    /// Reads a classifier written by [`save`](Self::save). Parameters come
    /// back rounded to f32.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(AttributionError::io(path))?;
        let m: ClassifierManifest = serde_json::from_str(&text)
            .map_err(|e| AttributionError::format(path, e.to_string()))?;
        if m.format_version != CLASSIFIER_FORMAT_VERSION {
            return Err(AttributionError::format(
                path,
                format!("unsupported format_version {}", m.format_version),
            ));
        }
        if m.dtype != "f32" || m.byte_order != "little" {
            return Err(AttributionError::format(path, "parameters must be little-endian f32".into()));
        }
        let (k, dim) = (m.cluster_ids.len(), m.dim);
        let block_path = path.with_file_name(&m.params_file);
        let expected = (k * dim + k + dim + 1) * 4;
        let len = fs::metadata(&block_path)
            .map_err(AttributionError::io(&block_path))?
            .len();
        if len != expected as u64 {
            return Err(AttributionError::format(
                &block_path,
                format!("expected {expected} bytes, found {len}"),
            ));
        }
        let bytes = fs::read(&block_path).map_err(AttributionError::io(&block_path))?;
        let v: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let (weights, rest) = v.split_at(k * dim);
        let (bias, rest) = rest.split_at(k);
        let (mean, scale) = rest.split_at(dim);
        let mut clf = Self::from_parameters(m.cluster_ids, dim, weights.to_vec(), bias.to_vec())?;
        clf.normalization = Normalization {
            mean: mean.to_vec(),
            scale: scale[0],
        };
        clf.config = m.config;
        clf.source = m.source;
        clf.epochs = m.epochs;
        clf.loss_history = m.final_loss.into_iter().collect();
        clf.accuracy_history = vec![m.train_accuracy];
        clf.train_accuracy = m.train_accuracy;
        Ok(clf)
    }
}

#[derive(Serialize, Deserialize)]
struct ClassifierManifest {
    format_version: u32,
    cluster_ids: Vec<usize>,
    dim: usize,
    config: TrainConfig,
    source: SourceInfo,
    epochs: usize,
    final_loss: Option<f64>,
    train_accuracy: f64,
    dtype: String,
    byte_order: String,
    params_file: String,
}

fn logits(weights: &[f64], bias: &[f64], x: &[f64], out: &mut [f64]) {
    let dim = x.len();
    for (c, o) in out.iter_mut().enumerate() {
        let w = &weights[c * dim..(c + 1) * dim];
        *o = bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    z.iter_mut().for_each(|v| *v /= total);
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Loss value with its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
    /// Rows whose argmax equals their label.
    pub correct: usize,
}

/// Mean softmax cross-entropy over the rows of `x` (`n x dim`) plus
/// `l2 / 2 * |W|^2`. The bias is not regularized.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: &[f64],
    x: &[f64],
    labels: &[usize],
    l2: f64,
) -> LossGradient {
    let k = bias.len();
    let n = labels.len();
    let dim = x.len().checked_div(n).unwrap_or(0);
    let partials: Vec<LossGradient> = x
        .par_chunks(CHUNK * dim.max(1))
        .zip(labels.par_chunks(CHUNK))
        .map(|(xs, ys)| {
            let mut acc = LossGradient {
                loss: 0.0,
                grad_weights: vec![0.0; k * dim],
                grad_bias: vec![0.0; k],
                correct: 0,
            };
            let mut p = vec![0.0; k];
            for (row, &y) in xs.chunks_exact(dim.max(1)).zip(ys) {
                logits(weights, bias, row, &mut p);
                softmax(&mut p);
                if argmax(&p) == y {
                    acc.correct += 1;
                }
                acc.loss -= p[y].max(f64::MIN_POSITIVE).ln();
                p[y] -= 1.0;
                for (c, &g) in p.iter().enumerate() {
                    acc.grad_bias[c] += g;
                    let gw = &mut acc.grad_weights[c * dim..(c + 1) * dim];
                    for (w, v) in gw.iter_mut().zip(row) {
                        *w += g * v;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = LossGradient {
        loss: 0.0,
        grad_weights: vec![0.0; k * dim],
        grad_bias: vec![0.0; k],
        correct: 0,
    };
    for part in partials {
        total.loss += part.loss;
        total.correct += part.correct;
        total.grad_weights.iter_mut().zip(&part.grad_weights).for_each(|(a, b)| *a += b);
        total.grad_bias.iter_mut().zip(&part.grad_bias).for_each(|(a, b)| *a += b);
    }
    let scale = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    total.loss *= scale;
    total.loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in total.grad_weights.iter_mut().zip(weights) {
        *g = *g * scale + l2 * w;
    }
    total.grad_bias.iter_mut().for_each(|g| *g *= scale);
    total
}

/// Fits a classifier on raw `n x dim` features with labels in `0..k`.
pub fn fit(
    x: &[f64],
    dim: usize,
    labels: &[usize],
    cluster_ids: Vec<usize>,
    config: TrainConfig,
) -> Result<ConceptClassifier> {
    let k = cluster_ids.len();
    if k < 2 {
        return Err(AttributionError::TooFewClusters(k));
    }
    if dim == 0 || x.len() != labels.len() * dim {
        return Err(AttributionError::Invalid(format!(
            "{} features do not form {} rows of dimension {dim}",
            x.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(AttributionError::Invalid("no training rows".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(AttributionError::Invalid(format!("label {bad} outside 0..{k}")));
    }
    if !(config.learning_rate > 0.0 && config.l2 >= 0.0 && config.tol >= 0.0) {
        return Err(AttributionError::Invalid(format!("bad training config {config:?}")));
    }

    let normalization = Normalization::fit(x, dim);
    let mut xs = vec![0.0; x.len()];
    for (raw, out) in x.chunks_exact(dim).zip(xs.chunks_exact_mut(dim)) {
        normalization.apply(raw, out);
    }

    let mut clf = ConceptClassifier::from_parameters(cluster_ids, dim, vec![0.0; k * dim], vec![0.0; k])?;
    clf.normalization = normalization;
    clf.config = config;

    let mut previous = f64::INFINITY;
    let mut correct = 0;
    for epoch in 0..=config.max_epochs {
        let lg = loss_and_gradient(&clf.weights, &clf.bias, &xs, labels, config.l2);
        if !lg.loss.is_finite() {
            let max_weight = clf.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            return Err(AttributionError::NonFiniteLoss {
                epoch,
                previous,
                max_weight,
                learning_rate: config.learning_rate,
            });
        }
        clf.loss_history.push(lg.loss);
        clf.accuracy_history.push(lg.correct as f64 / labels.len() as f64);
        correct = lg.correct;
        if epoch == config.max_epochs || (previous - lg.loss).abs() < config.tol {
            clf.epochs = epoch;
            break;
        }
        previous = lg.loss;
        for (w, g) in clf.weights.iter_mut().zip(&lg.grad_weights) {
            *w -= config.learning_rate * g;
        }
        for (b, g) in clf.bias.iter_mut().zip(&lg.grad_bias) {
            *b -= config.learning_rate * g;
        }
    }
    clf.train_accuracy = correct as f64 / labels.len() as f64;
    Ok(clf)
}

/// Trains on the kept clusters of `clusters`: every member's activation row
/// is a training point labelled with its cluster.
pub fn train_concept_classifier(
    dataset: &ActivationDataset,
    clusters: &ClusterSet,
    config: TrainConfig,
) -> Result<ConceptClassifier> {
    let mut kept: Vec<_> = clusters.clusters.iter().collect();
    kept.sort_by_key(|c| c.id);
    if kept.len() < 2 {
        return Err(AttributionError::TooFewClusters(kept.len()));
    }
    let dim = dataset.dim();
    let index = dataset.row_index();
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for (class, cluster) in kept.iter().enumerate() {
        for id in &cluster.members {
            let row = *index
                .get(id)
                .ok_or_else(|| AttributionError::MissingActivation(id.clone()))?;
            x.extend(dataset.row(row).iter().map(|&v| v as f64));
            labels.push(class);
        }
    }
    let ids = kept.iter().map(|c| c.id).collect();
    let mut clf = fit(&x, dim, &labels, ids, config)?;
    clf.source = clusters.source.clone();
    Ok(clf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_uniform_distribution() {
        let clf = ConceptClassifier::from_parameters(vec![3, 5, 9], 2, vec![0.0; 6], vec![0.0; 3]).unwrap();
        let (id, p) = clf.predict_concept(&[4.0, -1.0]).unwrap();
        assert_eq!(id, 3);
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let err = fit(&[0.0, 1.0], 2, &[0], vec![0], TrainConfig::default()).unwrap_err();
        assert!(matches!(err, AttributionError::TooFewClusters(1)));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let clf = ConceptClassifier::from_parameters(vec![0, 1], 2, vec![0.0; 4], vec![0.0; 2]).unwrap();
        assert!(matches!(
            clf.predict_concept(&[1.0]),
            Err(AttributionError::Dimension { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn exploding_learning_rate_reports_non_finite_loss() {
        let x = [1.0, 0.0, -1.0, 0.0];
        let err = fit(
            &x,
            2,
            &[0, 1],
            vec![0, 1],
            TrainConfig {
                learning_rate: 1e300,
                ..TrainConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, AttributionError::NonFiniteLoss { .. }), "{err}");
    }
}
