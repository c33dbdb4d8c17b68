//! Lexical and syntactic alignment of discovered clusters.

mod lexical;
mod syntactic;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use lexical::{
    detect_lexical_patterns, is_camel_case, is_pascal_case, LexicalPattern, PatternMatch,
    DEFAULT_LEXICAL_THRESHOLD, MIN_SUBSTRING_LEN,
};
pub use syntactic::{
    align_cluster, alignment_report, coverage, AlignmentReport, ClusterLabel, TagCounts,
    ThresholdRow, DEFAULT_THRESHOLDS,
};

use crate::corpus::TokenTable;
use crate::discovery::Cluster;
use crate::InstanceId;

#[derive(Debug, thiserror::Error)]
pub enum AlignmentError {
    #[error("cluster member {0} has no syntactic tag")]
    Unlabeled(InstanceId),
    #[error("tag `{0}` is not in the tag vocabulary")]
    UnknownTag(String),
    #[error("cluster member {0} has no token text")]
    MissingText(InstanceId),
    #[error("threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
}

pub type Result<T, E = AlignmentError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPatterns {
    pub cluster_id: usize,
    pub matches: Vec<PatternMatch>,
}

/// Share of clusters exhibiting each lexical pattern family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalReport {
    pub threshold: f64,
    pub total_clusters: usize,
    /// Percent of clusters, keyed by pattern.
    pub percentages: BTreeMap<LexicalPattern, f64>,
    pub clusters: Vec<ClusterPatterns>,
}

pub fn lexical_report(
    clusters: &[Cluster],
    tokens: &TokenTable,
    threshold: f64,
) -> Result<LexicalReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(AlignmentError::InvalidThreshold(threshold));
    }
    let mut per_cluster = Vec::with_capacity(clusters.len());
    for c in clusters {
        let texts = c
            .members
            .iter()
            .map(|id| {
                tokens
                    .text(id)
                    .ok_or_else(|| AlignmentError::MissingText(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        per_cluster.push(ClusterPatterns {
            cluster_id: c.id,
            matches: detect_lexical_patterns(&texts, threshold),
        });
    }
    let percentages = LexicalPattern::ALL
        .iter()
        .map(|&p| {
            let hits = per_cluster
                .iter()
                .filter(|c| c.matches.iter().any(|m| m.pattern == p))
                .count();
            let pct = if clusters.is_empty() {
                0.0
            } else {
                100.0 * hits as f64 / clusters.len() as f64
            };
            (p, pct)
        })
        .collect();
    Ok(LexicalReport {
        threshold,
        total_clusters: clusters.len(),
        percentages,
        clusters: per_cluster,
    })
}

impl LexicalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pattern,percent\n");
        for p in LexicalPattern::ALL {
            let _ = writeln!(out, "{},{:.1}", p.title(), self.percentages[&p]);
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "| Lexical Pattern (%) | {} clusters, threshold {:.0}% |\n|---|---:|\n",
            self.total_clusters,
            self.threshold * 100.0
        );
        for p in LexicalPattern::ALL {
            let _ = writeln!(out, "| {} | {:.1} |", p.title(), self.percentages[&p]);
        }
        out
    }
}

impl AlignmentReport {
    /// One row per threshold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "threshold,clusters_labeled,total_clusters,tag_coverage_pct,overall_alignment_score,unique_tags,unaligned_clusters\n",
        );
        for r in &self.thresholds {
            let _ = writeln!(
                out,
                "{},{},{},{:.2},{:.3},{},{}",
                r.threshold,
                r.clusters_labeled,
                self.total_clusters,
                r.tag_coverage_pct,
                r.overall_alignment_score,
                r.unique_tags,
                r.unaligned_clusters
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Metric |");
        for r in &self.thresholds {
            let _ = write!(out, " {:.0}% |", r.threshold * 100.0);
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(self.thresholds.len()));
        out.push('\n');
        let mut row = |name: String, cell: &dyn Fn(&ThresholdRow) -> String| {
            let _ = write!(out, "| {name} |");
            for r in &self.thresholds {
                let _ = write!(out, " {} |", cell(r));
            }
            out.push('\n');
        };
        row(
            format!("Clusters Labeled (/{})", self.total_clusters),
            &|r| r.clusters_labeled.to_string(),
        );
        row("Tag Coverage (%)".into(), &|r| format!("{:.1}", r.tag_coverage_pct));
        row("Overall Alignment Score".into(), &|r| {
            format!("{:.3}", r.overall_alignment_score)
        });
        row("Unique Tags Identified".into(), &|r| r.unique_tags.to_string());
        row("Unaligned Clusters".into(), &|r| r.unaligned_clusters.to_string());
        out
    }
}
