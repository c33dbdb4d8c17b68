//! LLM-backed cluster annotation: prompt construction, the HTTP call,
//! validation of the JSON answer, tag consolidation and rater agreement.

mod client;
mod kappa;
mod prompt;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use client::{request_annotation, run_bounded, LlmConfig};
pub use kappa::{fleiss_kappa, RatingMatrix};
pub use prompt::{build_prompt, default_few_shot, gather_contexts, FewShotExample, PromptOptions, DEFAULT_MAX_CONTEXTS};

use crate::corpus::{Corpus, TokenTable};
use crate::discovery::Cluster;
use crate::InstanceId;

/// Tag given to clusters whose annotation maps onto no canonical role.
pub const UNCLEAR_ROLE: &str = "Unclear Behavioral Role";
pub const MIN_TAGS: usize = 3;
pub const MAX_TAGS: usize = 5;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("cannot annotate an empty cluster")]
    EmptyCluster,
    #[error("token instance {0} is not in the token table or corpus")]
    UnknownInstance(InstanceId),
    #[error("invalid LLM configuration: {0}")]
    Config(String),
    #[error("API error: status {status}: {body}")]
    Api { status: u16, body: String },
    #[error("transport error after retries: {0}")]
    Transport(String),
    #[error("unexpected response shape: {0}")]
    Response(String),
    #[error("annotation is not valid JSON: {0}")]
    Parse(String),
    #[error("annotation schema violation in field {field}: {message}")]
    Schema { field: &'static str, message: String },
    #[error("invalid rating matrix: {0}")]
    Ratings(String),
    #[error("synonym map: {0}")]
    Synonyms(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed annotation file {path} line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptAnnotation {
    pub cluster_id: usize,
    pub label: String,
    pub semantic_tags: Vec<String>,
    pub description: String,
    pub raw_response: String,
    pub model_id: String,
}

impl ConceptAnnotation {
    /// The answer in the JSON shape the prompt asks for.
    pub fn to_response_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "Label": self.label,
            "Semantic_Tags": self.semantic_tags,
            "Description": self.description,
        }))
        .expect("string fields always serialize")
    }
}

fn strip_fences(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    // Drop the info string (`json`) on the opening fence line.
    let rest = rest.split_once('\n').map_or("", |(_, body)| body);
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

fn string_field(obj: &serde_json::Map<String, Value>, field: &'static str) -> Result<String, AnnotateError> {
    match obj.get(field) {
        None => Err(AnnotateError::Schema {
            field,
            message: "missing".into(),
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(AnnotateError::Schema {
            field,
            message: format!("expected a string, found {other}"),
        }),
    }
}

pub fn parse_annotation(raw: &str, cluster_id: usize, model_id: &str) -> Result<ConceptAnnotation, AnnotateError> {
    let value: Value = serde_json::from_str(strip_fences(raw)).map_err(|e| AnnotateError::Parse(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(AnnotateError::Parse("top-level value is not an object".into()));
    };
    let label = string_field(&obj, "Label")?;
    if label.trim().is_empty() {
        return Err(AnnotateError::Schema {
            field: "Label",
            message: "empty".into(),
        });
    }
    let tags = match obj.get("Semantic_Tags") {
        None => {
            return Err(AnnotateError::Schema {
                field: "Semantic_Tags",
                message: "missing".into(),
            })
        }
        Some(Value::Array(items)) => items
            .iter()
            .map(|t| match t {
                Value::String(s) => Ok(s.clone()),
                other => Err(AnnotateError::Schema {
                    field: "Semantic_Tags",
                    message: format!("non-string entry {other}"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(other) => {
            return Err(AnnotateError::Schema {
                field: "Semantic_Tags",
                message: format!("expected an array, found {other}"),
            })
        }
    };
    if !(MIN_TAGS..=MAX_TAGS).contains(&tags.len()) {
        return Err(AnnotateError::Schema {
            field: "Semantic_Tags",
            message: format!("{} tags, expected {MIN_TAGS} to {MAX_TAGS}", tags.len()),
        });
    }
    let description = string_field(&obj, "Description")?;
    Ok(ConceptAnnotation {
        cluster_id,
        label,
        semantic_tags: tags,
        description,
        raw_response: raw.to_owned(),
        model_id: model_id.to_owned(),
    })
}

/// Outcome of annotating one cluster.
#[derive(Debug)]
pub struct ClusterOutcome {
    pub cluster_id: usize,
    pub result: Result<ConceptAnnotation, AnnotateError>,
}

/// Prompts the LLM once per cluster, at most `config.max_in_flight` at a
/// time. Outcomes come back in the order of `clusters`.
pub fn annotate_clusters(
    clusters: &[Cluster],
    tokens: &TokenTable,
    corpus: &Corpus,
    options: &PromptOptions,
    config: &LlmConfig,
) -> Result<Vec<ClusterOutcome>, AnnotateError> {
    config.validate()?;
    let prompts = clusters
        .iter()
        .map(|c| {
            let (words, contexts) = gather_contexts(&c.members, tokens, corpus)?;
            Ok((c.id, build_prompt(&words, &contexts, options)))
        })
        .collect::<Result<Vec<_>, AnnotateError>>()?;
    Ok(run_bounded(&prompts, config.max_in_flight, |(id, prompt)| {
        let result = match prompt {
            Ok(prompt) => request_annotation(prompt, config, *id)
                .and_then(|raw| parse_annotation(&raw, *id, &config.model)),
            Err(_) => Err(AnnotateError::EmptyCluster),
        };
        ClusterOutcome {
            cluster_id: *id,
            result,
        }
    }))
}

/// Tag rewrites plus the canonical vocabulary they map into.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymMap {
    pub map: BTreeMap<String, String>,
    /// Empty means "no canonical set declared": every tag is accepted.
    pub canonical: BTreeSet<String>,
}

impl SynonymMap {
    pub fn new(map: BTreeMap<String, String>, canonical: BTreeSet<String>) -> Result<Self, AnnotateError> {
        if !canonical.is_empty() {
            if let Some((from, to)) = map.iter().find(|(_, to)| !canonical.contains(*to)) {
                return Err(AnnotateError::Synonyms(format!(
                    "{from:?} maps to {to:?}, which is not a canonical tag"
                )));
            }
        }
        Ok(Self { map, canonical })
    }

    /// Reads a two-column TSV (`tag<TAB>canonical`); `#` starts a comment.
    pub fn read_tsv(path: &Path) -> Result<BTreeMap<String, String>, AnnotateError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnnotateError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (from, to) = line.split_once('\t').ok_or_else(|| AnnotateError::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected two tab-separated columns".into(),
            })?;
            map.insert(from.trim().to_owned(), to.trim().to_owned());
        }
        Ok(map)
    }

    /// Reads one canonical tag per line; `#` starts a comment.
    pub fn read_canonical(path: &Path) -> Result<BTreeSet<String>, AnnotateError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnnotateError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect())
    }

    fn canonicalize<'a>(&'a self, tag: &'a str) -> &'a str {
        if tag == UNCLEAR_ROLE {
            return tag;
        }
        self.map.get(tag).map_or(tag, String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalAnnotation {
    pub cluster_id: usize,
    pub label: String,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagConsolidation {
    pub annotations: Vec<CanonicalAnnotation>,
    /// `(tag, clusters carrying it)`, most frequent first.
    pub frequencies: Vec<(String, usize)>,
    /// Non-canonical tags seen on at least two clusters.
    pub candidates: Vec<(String, usize)>,
}

fn ranked(counts: BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

pub fn normalize_tags(annotations: &[ConceptAnnotation], synonyms: &SynonymMap) -> TagConsolidation {
    let mut out = Vec::with_capacity(annotations.len());
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    let mut stray: BTreeMap<String, usize> = BTreeMap::new();
    for a in annotations {
        let mut tags: Vec<String> = Vec::new();
        for t in &a.semantic_tags {
            let c = synonyms.canonicalize(t).to_owned();
            if !tags.contains(&c) {
                tags.push(c);
            }
        }
        if !synonyms.canonical.is_empty() {
            for t in tags.iter().filter(|t| !synonyms.canonical.contains(*t) && *t != UNCLEAR_ROLE) {
                *stray.entry(t.clone()).or_default() += 1;
            }
            let mapped = tags.iter().any(|t| synonyms.canonical.contains(t) || t == UNCLEAR_ROLE);
            if !mapped {
                tags = vec![UNCLEAR_ROLE.to_owned()];
            } else {
                tags.retain(|t| synonyms.canonical.contains(t) || t == UNCLEAR_ROLE);
            }
        }
        for t in &tags {
            *freq.entry(t.clone()).or_default() += 1;
        }
        out.push(CanonicalAnnotation {
            cluster_id: a.cluster_id,
            label: a.label.clone(),
            tags,
        });
    }
    stray.retain(|_, c| *c >= 2);
    TagConsolidation {
        annotations: out,
        frequencies: ranked(freq),
        candidates: ranked(stray),
    }
}

pub fn write_annotations(path: &Path, annotations: &[ConceptAnnotation]) -> Result<(), AnnotateError> {
    let io = |source| AnnotateError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for a in annotations {
        serde_json::to_writer(&mut out, a).map_err(|e| io(e.into()))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_annotations(path: &Path) -> Result<Vec<ConceptAnnotation>, AnnotateError> {
    let io = |source| AnnotateError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| AnnotateError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
