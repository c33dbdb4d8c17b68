//! Cluster stability between two clusterings of (corresponding) token
//! instances: optimal one-to-one cluster matching by Jaccard similarity and
//! the Cluster Sensitivity Index, `CSI = 1 - average matched Jaccard`.

mod hungarian;

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hungarian::{max_weight_assignment, min_cost_assignment};

use crate::discovery::ClusterSet;
use crate::perturb::{CorrespondenceIndex, CorrespondenceMap, Origin};
use crate::InstanceId;

#[derive(Debug, thiserror::Error)]
pub enum RobustnessError {
    #[error("instances of snippet {0} have no correspondence to the reference clustering")]
    UnmappedSnippet(String),
}

/// |a ∩ b| / |a ∪ b|, and 1 when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    /// `None` for a padding slot.
    pub before: Option<usize>,
    pub after: Option<usize>,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k: usize,
    pub matching: Vec<MatchedPair>,
    #[serde(rename = "Average Jaccard")]
    pub average_jaccard: f64,
    #[serde(rename = "CSI")]
    pub csi: f64,
}

/// Optimal matching of two partitions given as member lists. The shorter
/// side is padded with empty clusters, which score 0 against anything.
pub fn match_partitions<T: Ord + Hash + Sync>(
    before: &[(usize, Vec<T>)],
    after: &[(usize, Vec<T>)],
) -> StabilityReport {
    let k = before.len().max(after.len());
    if k == 0 {
        return StabilityReport {
            k: 0,
            matching: Vec::new(),
            average_jaccard: 1.0,
            csi: 0.0,
        };
    }
    let home: HashMap<&T, usize> = after
        .iter()
        .enumerate()
        .flat_map(|(j, (_, m))| m.iter().map(move |x| (x, j)))
        .collect();
    let after_sizes: Vec<usize> = after
        .iter()
        .map(|(_, m)| m.iter().collect::<BTreeSet<_>>().len())
        .collect();

    let weights: Vec<f64> = (0..k)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut row = vec![0.0; k];
            if let Some((_, members)) = before.get(i) {
                let distinct: BTreeSet<&T> = members.iter().collect();
                let mut inter = vec![0usize; after.len()];
                for x in &distinct {
                    if let Some(&j) = home.get(x) {
                        inter[j] += 1;
                    }
                }
                for (j, slot) in row.iter_mut().enumerate().take(after.len()) {
                    let union = distinct.len() + after_sizes[j] - inter[j];
                    *slot = if union == 0 {
                        1.0
                    } else {
                        inter[j] as f64 / union as f64
                    };
                }
            }
            row
        })
        .collect();

    let assignment = max_weight_assignment(&weights, k);
    let matching: Vec<MatchedPair> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| MatchedPair {
            before: before.get(i).map(|c| c.0),
            after: after.get(j).map(|c| c.0),
            jaccard: weights[i * k + j],
        })
        .collect();
    let average = matching.iter().map(|m| m.jaccard).sum::<f64>() / k as f64;
    StabilityReport {
        k,
        matching,
        average_jaccard: average,
        csi: 1.0 - average,
    }
}

/// Compares the kept clusters of two clusterings. With a correspondence,
/// `after` members are translated to original instances first; created
/// tokens stay distinct and only count toward unions.
pub fn match_clusterings(
    before: &ClusterSet,
    after: &ClusterSet,
    maps: Option<&[CorrespondenceMap]>,
) -> Result<StabilityReport, RobustnessError> {
    let left: Vec<(usize, Vec<Origin>)> = before
        .clusters
        .iter()
        .map(|c| {
            (
                c.id,
                c.members.iter().cloned().map(Origin::Original).collect(),
            )
        })
        .collect();
    let right: Vec<(usize, Vec<Origin>)> = match maps {
        None => after
            .clusters
            .iter()
            .map(|c| {
                (
                    c.id,
                    c.members.iter().cloned().map(Origin::Original).collect(),
                )
            })
            .collect(),
        Some(maps) => {
            let index = CorrespondenceIndex::new(maps);
            after
                .clusters
                .iter()
                .map(|c| {
                    let members = c
                        .members
                        .iter()
                        .map(|id| index.origin(id).map_err(RobustnessError::UnmappedSnippet))
                        .collect::<Result<_, _>>()?;
                    Ok((c.id, members))
                })
                .collect::<Result<_, _>>()?
        }
    };
    Ok(match_partitions(&left, &right))
}

/// Without a correspondence, both clusterings must cover the same
/// instances; the error names the first snippet that differs.
pub fn check_same_universe(before: &ClusterSet, after: &ClusterSet) -> Result<(), RobustnessError> {
    let a = before.instances();
    let b = after.instances();
    if let Some(id) = a.symmetric_difference(&b).next() {
        return Err(RobustnessError::UnmappedSnippet(id.snippet_id.clone()));
    }
    Ok(())
}

/// Convenience for clusterings given as plain instance lists.
pub fn csi_of(before: &[Vec<InstanceId>], after: &[Vec<InstanceId>]) -> f64 {
    let l: Vec<_> = before.iter().cloned().enumerate().collect();
    let r: Vec<_> = after.iter().cloned().enumerate().collect();
    match_partitions(&l, &r).csi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[char]) -> BTreeSet<char> {
        xs.iter().copied().collect()
    }

    fn parts(groups: &[&[char]]) -> Vec<(usize, Vec<char>)> {
        groups.iter().map(|g| g.to_vec()).enumerate().collect()
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard(&set(&['a', 'b']), &set(&['a', 'b'])), 1.0);
        assert_eq!(jaccard(&set(&['a']), &set(&['b'])), 0.0);
        assert_eq!(jaccard(&set(&['x', 'y']), &set(&['y', 'z'])), 1.0 / 3.0);
        assert_eq!(jaccard::<char>(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn identical_partitions() {
        let p = parts(&[&['a', 'b'], &['c']]);
        let r = match_partitions(&p, &p);
        assert_eq!(r.average_jaccard, 1.0);
        assert_eq!(r.csi, 0.0);
    }

    #[test]
    fn worked_two_cluster_example() {
        let r = match_partitions(&parts(&[&['a', 'b'], &['c']]), &parts(&[&['a'], &['b', 'c']]));
        assert!((r.average_jaccard - 0.5).abs() < 1e-12);
        assert!((r.csi - 0.5).abs() < 1e-12);
        assert_eq!(r.matching[0].after, Some(0));
        assert_eq!(r.matching[1].after, Some(1));
    }

    #[test]
    fn padding_for_unequal_k() {
        let r = match_partitions(&parts(&[&['a'], &['b'], &['c']]), &parts(&[&['a', 'b', 'c']]));
        assert_eq!(r.k, 3);
        assert!((r.average_jaccard - (1.0 / 3.0) / 3.0).abs() < 1e-12);
        assert_eq!(r.matching.iter().filter(|m| m.after.is_none()).count(), 2);
    }

    #[test]
    fn disjoint_universes() {
        let r = match_partitions(&parts(&[&['a'], &['b']]), &parts(&[&['x'], &['y']]));
        assert_eq!(r.csi, 1.0);
    }
}
