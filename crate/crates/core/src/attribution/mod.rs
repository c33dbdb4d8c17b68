//! Grounding token attributions in latent concepts.
//!
//! Given per-token attribution scores for one prediction, [`select_salient`]
//! keeps the smallest set of highest-scoring tokens that carries a fraction
//! `P` of the attribution mass. A [`ConceptClassifier`] maps each selected
//! token's activation to a cluster, and [`build_explanation_prompt`] turns
//! token, snippet and cluster into a request for a natural-language
//! explanation.

mod classifier;

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use classifier::{
    fit, loss_and_gradient, train_concept_classifier, ConceptClassifier, LossGradient,
    Normalization, TrainConfig, CLASSIFIER_FORMAT_VERSION,
};

use crate::activation_io::{ActivationDataset, AttributionRecord};
use crate::annotate::gather_contexts;
use crate::corpus::{Corpus, TokenTable};
use crate::discovery::ClusterSet;
use crate::InstanceId;

pub const DEFAULT_TOP_P: f64 = 0.5;
pub const DEFAULT_TASK: &str = "Programming Language Classification";
pub const DEFAULT_MAX_WORDS: usize = 50;
pub const DEFAULT_MAX_CONTEXTS: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum AttributionError {
    #[error("no attribution mass for snippet {0}")]
    NoAttributionMass(String),
    #[error("top-P fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("need at least 2 clusters to train a concept classifier, found {0}")]
    TooFewClusters(usize),
    #[error("no activation row for {0}")]
    MissingActivation(InstanceId),
    #[error("activation has dimension {actual}, classifier expects {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error(
        "loss became non-finite at epoch {epoch} (previous loss {previous}, \
         largest |weight| {max_weight}, learning rate {learning_rate})"
    )]
    NonFiniteLoss {
        epoch: usize,
        previous: f64,
        max_weight: f64,
        learning_rate: f64,
    },
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("token {0} is not in the token table or corpus")]
    UnknownInstance(InstanceId),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl AttributionError {
    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, message: String) -> Self {
        Self::Format {
            path: path.to_path_buf(),
            message,
        }
    }
}

pub type Result<T, E = AttributionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalientSelection {
    pub snippet_id: String,
    /// Selected token indices, highest normalized score first.
    pub selected: Vec<usize>,
    /// `|score| / sum |score|`, indexed by token.
    pub scores: Vec<f64>,
    pub p: f64,
}

impl SalientSelection {
    pub fn mass(&self) -> f64 {
        self.selected.iter().map(|&i| self.scores[i]).sum()
    }
}

/// Selects the shortest prefix of tokens, ranked by normalized absolute
/// score (ties by index), whose cumulative mass reaches `p`.
pub fn select_salient(record: &AttributionRecord, p: f64) -> Result<SalientSelection> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(AttributionError::InvalidFraction(p));
    }
    if record.scores.iter().any(|s| !s.is_finite()) {
        return Err(AttributionError::Invalid(format!(
            "non-finite attribution score for snippet {}",
            record.snippet_id
        )));
    }
    let total: f64 = record.scores.iter().map(|s| s.abs()).sum();
    if total == 0.0 {
        return Err(AttributionError::NoAttributionMass(record.snippet_id.clone()));
    }
    let scores: Vec<f64> = record.scores.iter().map(|s| s.abs() / total).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut selected = Vec::new();
    let mut cumulative = 0.0;
    for &i in &order {
        if scores[i] == 0.0 {
            break;
        }
        selected.push(i);
        cumulative += scores[i];
        if cumulative >= p {
            break;
        }
    }
    Ok(SalientSelection {
        snippet_id: record.snippet_id.clone(),
        selected,
        scores,
        p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationOptions {
    pub task: String,
    pub max_words: usize,
    pub max_contexts: usize,
}

impl Default for ExplanationOptions {
    fn default() -> Self {
        Self {
            task: DEFAULT_TASK.into(),
            max_words: DEFAULT_MAX_WORDS,
            max_contexts: DEFAULT_MAX_CONTEXTS,
        }
    }
}

/// What the prompt says about the salient token.
#[derive(Debug, Clone, PartialEq)]
pub struct SalientToken<'a> {
    pub token: &'a str,
    pub sentence: &'a str,
    pub position: usize,
    /// Sentence-level tokens get the whole-input variant of the prompt.
    pub is_sentence_token: bool,
}

fn capped<'a>(items: &'a [String], cap: usize, noun: &str) -> (&'a [String], Option<String>) {
    if items.len() > cap {
        (
            &items[..cap],
            Some(format!("(showing {cap} of {} {noun})", items.len())),
        )
    } else {
        (items, None)
    }
}

/// Fills the explanation template for one salient token.
///
/// `cluster_words` are the distinct words of the token's cluster, most
/// representative first; `contexts` are lines in which they occur and are
/// only used by the sentence-level variant.
pub fn build_explanation_prompt(
    salient: &SalientToken<'_>,
    cluster_words: &[String],
    contexts: &[String],
    label: &str,
    options: &ExplanationOptions,
) -> Result<String> {
    if cluster_words.is_empty() {
        return Err(AttributionError::Invalid(
            "cannot explain a token with an empty cluster".into(),
        ));
    }
    let (words, words_note) = capped(cluster_words, options.max_words.max(1), "cluster words");
    let mut word_list = words.join(", ");
    if let Some(note) = &words_note {
        word_list.push(' ');
        word_list.push_str(note);
    }

    let mut out = String::new();
    if salient.is_sentence_token {
        out.push_str(&format!(
            "[CLS] tokens represent the entire sentence. This sentence is from {label} code. \
             Explain the semantic, structural, lexical, or topical meaning in relation to the \
             list of words from similar contexts. What cohesive meaning does this sentence share \
             with the contextual themes?\n\n"
        ));
        out.push_str(&format!("Original Sentence: {}\n", salient.sentence));
        out.push_str(&format!("List of cluster words: {word_list}\n\n"));
        out.push_str("Context Sentences of the list of cluster words:\n");
        let (shown, note) = capped(contexts, options.max_contexts, "context sentences");
        if shown.is_empty() {
            out.push_str("(no contexts)\n");
        }
        for (i, line) in shown.iter().enumerate() {
            out.push_str(&format!("{}. {line}\n", i + 1));
        }
        if let Some(note) = note {
            out.push_str(&note);
            out.push('\n');
        }
        out.push_str(&format!(
            "\nAnswer concisely and to the point about how these patterns are characteristic of {label} code.\n"
        ));
    } else {
        out.push_str(&format!(
            "The task is {}. The sentence is from {label} code.\n\n",
            options.task
        ));
        out.push_str(
            "Do you find any common semantic, structural, lexical and topical relation between \
             the original token (with its position) given to you and the following list of words? \
             Give a more specific and concise summary about the most prominent relation among \
             these words.\n\n",
        );
        out.push_str(&format!("Original token: {}\n", salient.token));
        out.push_str(&format!("Token's sentence: {}\n", salient.sentence));
        out.push_str(&format!(
            "Position of the original token in the sentence: {}\n",
            salient.position
        ));
        out.push_str(&format!("List of words (Cluster): {word_list}\n\n"));
        out.push_str(&format!(
            "Does the List of Words (Cluster) help in predicting that this is {label} code? Why or why not?\n\n"
        ));
        out.push_str("Answer to the point\n");
    }
    Ok(out)
}

/// The snippet as a single line, whitespace runs collapsed to one space.
pub fn sentence_of(source: &str) -> String {
    source.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Distinct token texts of a cluster, most frequent first (ties by text).
pub fn cluster_words(members: &[InstanceId], tokens: &TokenTable) -> Result<Vec<String>> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for id in members {
        let text = tokens
            .text(id)
            .ok_or_else(|| AttributionError::UnknownInstance(id.clone()))?;
        *counts.entry(text).or_default() += 1;
    }
    let mut words: Vec<(&str, usize)> = counts.into_iter().collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Ok(words.into_iter().map(|(w, _)| w.to_owned()).collect())
}

/// One salient token mapped to its concept, with the prompt to explain it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub snippet_id: String,
    pub token_idx: usize,
    pub token: String,
    /// Normalized attribution score of the token.
    pub score: f64,
    pub predicted_label: String,
    pub cluster_id: usize,
    pub probability: f64,
    pub prompt: String,
}

/// Inputs shared by every record of an [`explain`] run.
pub struct ExplainInputs<'a> {
    pub dataset: &'a ActivationDataset,
    pub clusters: &'a ClusterSet,
    pub tokens: &'a TokenTable,
    pub corpus: &'a Corpus,
    pub classifier: &'a ConceptClassifier,
}

/// Selects salient tokens of every record, predicts their concepts and
/// builds one prompt per token. Records come out in input order, tokens in
/// salience order.
pub fn explain(
    inputs: &ExplainInputs<'_>,
    records: &[AttributionRecord],
    top_p: f64,
    options: &ExplanationOptions,
) -> Result<Vec<Explanation>> {
    let index = inputs.dataset.row_index();
    let mut per_cluster: HashMap<usize, (Vec<String>, Vec<String>)> = HashMap::new();
    let mut out = Vec::new();
    for record in records {
        let selection = select_salient(record, top_p)?;
        let snippet = inputs
            .corpus
            .get(&record.snippet_id)
            .ok_or_else(|| AttributionError::UnknownInstance(InstanceId::new(&record.snippet_id, 0)))?;
        let sentence = sentence_of(&snippet.source);
        for &idx in &selection.selected {
            let id = InstanceId::new(&record.snippet_id, idx);
            let row = *index
                .get(&id)
                .ok_or_else(|| AttributionError::MissingActivation(id.clone()))?;
            let (cluster_id, probs) = inputs.classifier.predict_concept(inputs.dataset.row(row))?;
            let class = inputs
                .classifier
                .cluster_ids
                .binary_search(&cluster_id)
                .expect("predicted id is a classifier id");
            if let Entry::Vacant(slot) = per_cluster.entry(cluster_id) {
                let cluster = inputs
                    .clusters
                    .cluster(cluster_id)
                    .filter(|c| !c.is_empty())
                    .ok_or(AttributionError::EmptyCluster(cluster_id))?;
                let words = cluster_words(&cluster.members, inputs.tokens)?;
                let (_, contexts) = gather_contexts(&cluster.members, inputs.tokens, inputs.corpus)
                    .map_err(|_| AttributionError::Invalid(format!("cluster {cluster_id} references unknown tokens")))?;
                slot.insert((words, contexts));
            }
            let (words, contexts) = &per_cluster[&cluster_id];
            let token = inputs
                .tokens
                .text(&id)
                .ok_or_else(|| AttributionError::UnknownInstance(id.clone()))?;
            let salient = SalientToken {
                token,
                sentence: &sentence,
                position: idx,
                is_sentence_token: false,
            };
            let prompt = build_explanation_prompt(&salient, words, contexts, &record.predicted_label, options)?;
            out.push(Explanation {
                snippet_id: record.snippet_id.clone(),
                token_idx: idx,
                token: token.to_owned(),
                score: selection.scores[idx],
                predicted_label: record.predicted_label.clone(),
                cluster_id,
                probability: probs[class],
                prompt,
            });
        }
    }
    Ok(out)
}

pub fn write_explanations(path: &Path, explanations: &[Explanation]) -> Result<()> {
    let file = File::create(path).map_err(AttributionError::io(path))?;
    let mut out = BufWriter::new(file);
    for e in explanations {
        let line = serde_json::to_string(e).expect("explanation serializes");
        writeln!(out, "{line}").map_err(AttributionError::io(path))?;
    }
    out.flush().map_err(AttributionError::io(path))
}
