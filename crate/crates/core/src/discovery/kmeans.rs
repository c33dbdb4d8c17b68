//! Lloyd's K-Means with k-means++ seeding.
//!
//! Distances are plain Euclidean on the raw rows, accumulated in `f64`. The
//! assignment step runs in parallel per row; centroid sums are accumulated
//! sequentially in row order, so a fit is identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::DiscoveryError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid displacement (L2).
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 350,
            seed: 42,
            max_iter: 300,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    /// `k x dim`, row-major.
    pub centroids: Vec<f64>,
    pub dim: usize,
    /// Sum of squared distances after every assignment step.
    pub sse_history: Vec<f64>,
    pub converged: bool,
}

impl KMeansFit {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn sse(&self) -> f64 {
        self.sse_history.last().copied().unwrap_or(0.0)
    }

    pub fn iterations(&self) -> usize {
        self.sse_history.len()
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }
}

fn sq_dist(a: &[f32], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y;
            d * d
        })
        .sum()
}

/// Clusters the `n x dim` row-major matrix `data` into `config.k` groups.
pub fn kmeans(data: &[f32], dim: usize, config: &KMeansConfig) -> Result<KMeansFit, DiscoveryError> {
    if dim == 0 {
        return Err(DiscoveryError::InvalidInput("dimension must be positive".into()));
    }
    if !data.len().is_multiple_of(dim) {
        return Err(DiscoveryError::InvalidInput(format!(
            "{} values do not form rows of {dim}",
            data.len()
        )));
    }
    let n = data.len() / dim;
    let k = config.k;
    if k == 0 {
        return Err(DiscoveryError::InvalidInput("k must be at least 1".into()));
    }
    if n < k {
        return Err(DiscoveryError::TooFewRows { rows: n, k });
    }
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(DiscoveryError::InvalidInput(format!(
            "non-finite value in row {}",
            pos / dim
        )));
    }

    let rows: Vec<&[f32]> = data.chunks_exact(dim).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = plus_plus_init(&rows, dim, k, &mut rng);

    let mut labels: Vec<usize> = Vec::new();
    let mut sse_history = Vec::new();
    let mut converged = false;
    let mut stale = false;

    for _ in 0..config.max_iter.max(1) {
        let (new_labels, dists) = assign(&rows, &centroids, dim);
        sse_history.push(dists.iter().sum());
        let changed = new_labels != labels;
        labels = new_labels;
        stale = false;
        if !changed {
            converged = true;
            break;
        }
        let updated = update(&rows, &mut labels, &dists, &centroids, dim, k);
        let shift = (0..k)
            .map(|c| {
                let (a, b) = (&centroids[c * dim..(c + 1) * dim], &updated[c * dim..(c + 1) * dim]);
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        centroids = updated;
        stale = true;
        if shift < config.tol {
            converged = true;
            break;
        }
    }
    if stale {
        let (final_labels, dists) = assign(&rows, &centroids, dim);
        sse_history.push(dists.iter().sum());
        labels = final_labels;
    }

    Ok(KMeansFit {
        labels,
        centroids,
        dim,
        sse_history,
        converged,
    })
}

fn plus_plus_init(rows: &[&[f32]], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rows.len();
    let mut centroids = Vec::with_capacity(k * dim);
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    centroids.extend(rows[first].iter().map(|&v| v as f64));

    let mut closest: Vec<f64> = rows
        .par_iter()
        .map(|r| sq_dist(r, &centroids[..dim]))
        .collect();
    for _ in 1..k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in closest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| closest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every remaining point coincides with a centroid
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[next] = true;
        let start = centroids.len();
        centroids.extend(rows[next].iter().map(|&v| v as f64));
        let latest = &centroids[start..];
        closest
            .par_iter_mut()
            .zip(rows.par_iter())
            .for_each(|(c, r)| *c = c.min(sq_dist(r, latest)));
    }
    centroids
}

fn assign(rows: &[&[f32]], centroids: &[f64], dim: usize) -> (Vec<usize>, Vec<f64>) {
    rows.par_iter()
        .map(|r| {
            let mut best = (0, f64::INFINITY);
            for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
                let d = sq_dist(r, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

/// New centroids as member means. A cluster left empty takes over the point
/// farthest from its current centroid (among clusters with spare members).
fn update(
    rows: &[&[f32]],
    labels: &mut [usize],
    dists: &[f64],
    old: &[f64],
    dim: usize,
    k: usize,
) -> Vec<f64> {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut taken = vec![false; rows.len()];
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let donor = (0..rows.len())
            .filter(|&i| !taken[i] && counts[labels[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = donor {
            counts[labels[i]] -= 1;
            labels[i] = c;
            counts[c] = 1;
            taken[i] = true;
        }
    }

    let mut sums = vec![0.0f64; k * dim];
    for (r, &l) in rows.iter().zip(labels.iter()) {
        for (s, &v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(r.iter()) {
            *s += v as f64;
        }
    }
    for c in 0..k {
        let slot = &mut sums[c * dim..(c + 1) * dim];
        if counts[c] == 0 {
            slot.copy_from_slice(&old[c * dim..(c + 1) * dim]);
        } else {
            let inv = counts[c] as f64;
            slot.iter_mut().for_each(|s| *s /= inv);
        }
    }
    sums
}
