//! Markdown dossier combining the outputs of every stage.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::alignment::{AlignmentReport, LexicalReport};
use crate::annotate::ConceptAnnotation;
use crate::corpus::TokenTable;
use crate::discovery::{Cluster, ClusterSet};
use crate::robustness::StabilityReport;

pub const TOP_TOKENS: usize = 30;

/// Stability of the clustering under one perturbation kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiEntry {
    pub perturbation: String,
    #[serde(flatten)]
    pub report: StabilityReport,
}

/// Everything a report can show. Missing parts are reported as such.
#[derive(Default)]
pub struct Dossier<'a> {
    pub clusters: Option<&'a ClusterSet>,
    pub tokens: Option<&'a TokenTable>,
    pub lexical: Option<&'a LexicalReport>,
    pub alignment: Option<&'a AlignmentReport>,
    pub csi: &'a [CsiEntry],
    pub annotations: &'a [ConceptAnnotation],
}

/// Most frequent token texts of a cluster with their counts, ties by text.
pub fn top_tokens(cluster: &Cluster, tokens: &TokenTable, n: usize) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for id in &cluster.members {
        *counts.entry(tokens.text(id).unwrap_or("?")).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(n)
        .map(|(t, c)| (t.to_owned(), c))
        .collect()
}

/// Markdown cell text with pipes and newlines neutralized.
fn cell(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('|', "\\|")
        .replace('`', "'")
        .replace(['\n', '\r'], " ")
}

pub fn csi_markdown(entries: &[CsiEntry]) -> String {
    let mut out = String::from("| Perturbation | Average Jaccard | CSI |\n|---|---:|---:|\n");
    for e in entries {
        let _ = writeln!(
            out,
            "| {} | {:.3} | {:.3} |",
            cell(&e.perturbation),
            e.report.average_jaccard,
            e.report.csi
        );
    }
    if !entries.is_empty() {
        let n = entries.len() as f64;
        let aj = entries.iter().map(|e| e.report.average_jaccard).sum::<f64>() / n;
        let csi = entries.iter().map(|e| e.report.csi).sum::<f64>() / n;
        let _ = writeln!(out, "| **Average** | {aj:.3} | {csi:.3} |");
    }
    out
}

pub fn csi_csv(entries: &[CsiEntry]) -> String {
    let mut out = String::from("perturbation,k,average_jaccard,csi\n");
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6}",
            e.perturbation, e.report.k, e.report.average_jaccard, e.report.csi
        );
    }
    out
}

impl Dossier<'_> {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Latent concept report\n\n");

        out.push_str("## Clusters\n\n");
        match self.clusters {
            Some(cs) => {
                let members: usize = cs.clusters.iter().map(Cluster::len).sum();
                let _ = writeln!(
                    out,
                    "Model `{}`, layer {}, dimension {}. K = {}, {} kept clusters with {} token instances, {} pruned. \
                     K-Means ran {} iterations (converged: {}), SSE {:.4}.\n",
                    cell(&cs.source.model_id),
                    cs.source.layer,
                    cs.dim,
                    cs.k(),
                    cs.clusters.len(),
                    members,
                    cs.pruned.len(),
                    cs.iterations,
                    cs.converged,
                    cs.sse
                );
                if !cs.removed_types.is_empty() {
                    let _ = writeln!(
                        out,
                        "{} token types above the frequency cap were excluded.\n",
                        cs.removed_types.len()
                    );
                }
            }
            None => out.push_str("_No clustering supplied._\n\n"),
        }

        out.push_str("## Lexical patterns\n\n");
        match self.lexical {
            Some(l) => {
                out.push_str(&l.to_markdown());
                out.push('\n');
            }
            None => out.push_str("_No lexical report supplied._\n\n"),
        }

        out.push_str("## Syntactic alignment\n\n");
        match self.alignment {
            Some(a) => {
                let _ = writeln!(out, "Tag vocabulary: {} tags.\n", a.vocabulary_size);
                out.push_str(&a.to_markdown());
                out.push('\n');
            }
            None => out.push_str("_No alignment report supplied._\n\n"),
        }

        out.push_str("## Robustness\n\n");
        if self.csi.is_empty() {
            out.push_str("_No stability results supplied._\n\n");
        } else {
            out.push_str(&csi_markdown(self.csi));
            out.push('\n');
        }

        if !self.annotations.is_empty() {
            out.push_str("## Concept labels\n\n| Cluster | Label | Semantic tags |\n|---:|---|---|\n");
            let mut sorted: Vec<&ConceptAnnotation> = self.annotations.iter().collect();
            sorted.sort_by_key(|a| a.cluster_id);
            for a in sorted {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} |",
                    a.cluster_id,
                    cell(&a.label),
                    cell(&a.semantic_tags.join(", "))
                );
            }
            out.push('\n');
        }

        if let (Some(cs), Some(tokens)) = (self.clusters, self.tokens) {
            let labels: BTreeMap<usize, (Option<&str>, f64)> = self
                .alignment
                .map(|a| {
                    a.clusters
                        .iter()
                        .map(|c| (c.cluster_id, (c.tag.as_deref(), c.purity)))
                        .collect()
                })
                .unwrap_or_default();
            let _ = writeln!(out, "## Cluster samples\n\nTop {TOP_TOKENS} tokens by frequency.\n");
            for c in &cs.clusters {
                let _ = write!(out, "### Cluster {} ({} tokens", c.id, c.len());
                if let Some((Some(tag), purity)) = labels.get(&c.id) {
                    let _ = write!(out, ", majority tag `{}` at {:.0}%", cell(tag), purity * 100.0);
                }
                out.push_str(")\n\n");
                let sample: Vec<String> = top_tokens(c, tokens, TOP_TOKENS)
                    .into_iter()
                    .map(|(t, n)| format!("`{}` ({n})", cell(&t)))
                    .collect();
                out.push_str(&sample.join(", "));
                out.push_str("\n\n");
            }
        }
        out
    }
}
