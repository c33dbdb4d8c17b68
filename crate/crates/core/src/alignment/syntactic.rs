//! Alignment of discovered clusters with ground-truth syntactic tags.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AlignmentError, Result};
use crate::corpus::SyntacticLabeling;
use crate::discovery::Cluster;
use crate::InstanceId;

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.85, 0.90, 0.95];

/// Tag histogram of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct TagCounts {
    pub size: usize,
    pub counts: BTreeMap<String, usize>,
}

impl TagCounts {
    pub fn of(members: &[InstanceId], labeling: &SyntacticLabeling) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for id in members {
            let tag = labeling
                .tag(id)
                .ok_or_else(|| AlignmentError::Unlabeled(id.clone()))?;
            *counts.entry(tag.to_owned()).or_insert(0) += 1;
        }
        Ok(Self {
            size: members.len(),
            counts,
        })
    }

    /// The majority tag; ties go to the lexicographically smaller tag.
    pub fn best(&self) -> Option<(&str, usize)> {
        self.counts
            .iter()
            .fold(None, |acc: Option<(&str, usize)>, (t, &c)| match acc {
                Some((_, bc)) if bc >= c => acc,
                _ => Some((t.as_str(), c)),
            })
    }

    pub fn fraction(&self, tag: &str) -> f64 {
        if self.size == 0 {
            return 0.0;
        }
        self.counts.get(tag).copied().unwrap_or(0) as f64 / self.size as f64
    }
}

/// The tag maximizing |C_e ∩ C_h| / |C_e| and that overlap, if it reaches
/// `threshold`.
pub fn align_cluster(
    members: &[InstanceId],
    labeling: &SyntacticLabeling,
    threshold: f64,
) -> Result<Option<(String, f64)>> {
    let counts = TagCounts::of(members, labeling)?;
    Ok(counts.best().and_then(|(tag, _)| {
        let fraction = counts.fraction(tag);
        (fraction >= threshold).then(|| (tag.to_owned(), fraction))
    }))
}

/// Whether some cluster has at least `threshold` of its members tagged `tag`.
pub fn coverage(
    tag: &str,
    clusters: &[Cluster],
    labeling: &SyntacticLabeling,
    threshold: f64,
) -> Result<bool> {
    if !labeling.tag_vocabulary.contains(tag) {
        return Err(AlignmentError::UnknownTag(tag.to_owned()));
    }
    for c in clusters {
        if TagCounts::of(&c.members, labeling)?.fraction(tag) >= threshold {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub clusters_labeled: usize,
    pub tag_coverage_pct: f64,
    pub overall_alignment_score: f64,
    pub unique_tags: usize,
    pub unaligned_clusters: usize,
    pub covered_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub cluster_id: usize,
    pub size: usize,
    pub tag: Option<String>,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub total_clusters: usize,
    pub vocabulary_size: usize,
    pub thresholds: Vec<ThresholdRow>,
    pub clusters: Vec<ClusterLabel>,
}

/// Per-threshold alignment and coverage metrics over `clusters`.
///
/// The overall alignment score is token-weighted majority-tag purity:
/// the summed majority-tag counts divided by the summed cluster sizes. It
/// does not depend on the threshold.
pub fn alignment_report(
    clusters: &[Cluster],
    labeling: &SyntacticLabeling,
    thresholds: &[f64],
) -> Result<AlignmentReport> {
    for &t in thresholds {
        if !(t > 0.0 && t <= 1.0) {
            return Err(AlignmentError::InvalidThreshold(t));
        }
    }
    let counts: Vec<TagCounts> = clusters
        .iter()
        .map(|c| TagCounts::of(&c.members, labeling))
        .collect::<Result<_>>()?;

    let total_members: usize = counts.iter().map(|c| c.size).sum();
    let majority: usize = counts
        .iter()
        .map(|c| c.best().map_or(0, |(_, n)| n))
        .sum();
    let score = if total_members == 0 {
        0.0
    } else {
        majority as f64 / total_members as f64
    };

    // best fraction any cluster achieves for each tag
    let mut tag_best: BTreeMap<&str, f64> = BTreeMap::new();
    for c in &counts {
        for tag in c.counts.keys() {
            let f = c.fraction(tag);
            let slot = tag_best.entry(tag.as_str()).or_insert(0.0);
            if f > *slot {
                *slot = f;
            }
        }
    }

    let vocab = labeling.tag_vocabulary.len();
    let rows = thresholds
        .iter()
        .map(|&theta| {
            let labeled = counts
                .iter()
                .filter(|c| c.best().is_some_and(|(tag, _)| c.fraction(tag) >= theta))
                .count();
            let covered: BTreeSet<&str> = tag_best
                .iter()
                .filter(|&(_, &f)| f >= theta)
                .map(|(&t, _)| t)
                .collect();
            ThresholdRow {
                threshold: theta,
                clusters_labeled: labeled,
                tag_coverage_pct: if vocab == 0 {
                    0.0
                } else {
                    100.0 * covered.len() as f64 / vocab as f64
                },
                overall_alignment_score: score,
                unique_tags: covered.len(),
                unaligned_clusters: clusters.len() - labeled,
                covered_tags: covered.into_iter().map(str::to_owned).collect(),
            }
        })
        .collect();

    let labels = clusters
        .iter()
        .zip(&counts)
        .map(|(c, tc)| {
            let best = tc.best();
            ClusterLabel {
                cluster_id: c.id,
                size: tc.size,
                tag: best.map(|(t, _)| t.to_owned()),
                purity: best.map_or(0.0, |(t, _)| tc.fraction(t)),
            }
        })
        .collect();

    Ok(AlignmentReport {
        total_clusters: clusters.len(),
        vocabulary_size: vocab,
        thresholds: rows,
        clusters: labels,
    })
}
