//! The few-shot cluster annotation prompt.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::AnnotateError;
use crate::corpus::{Corpus, TokenTable};
use crate::InstanceId;

pub const DEFAULT_MAX_CONTEXTS: usize = 12;

/// One worked example shown to the model before the cluster under analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub tokens: Vec<String>,
    pub contexts: Vec<String>,
    pub label: String,
    pub semantic_tags: Vec<String>,
    pub description: String,
}

/// The two worked examples of the published prompt.
pub fn default_few_shot() -> Vec<FewShotExample> {
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        FewShotExample {
            tokens: s(&["returnBuffer", "concatBuffer"]),
            contexts: s(&[
                "returnBuffer.append(minParam);",
                "returnBuffer.append(FieldMetaData.Decimal.SQ_CLOSE);",
                "StringBuffer concatBuffer = new StringBuffer();",
                "concatBuffer.append(toAdd);",
            ]),
            label: "Buffer Manipulation".into(),
            semantic_tags: s(&["StringBuilder", "StringBuffer", "Data Aggregation", "String Concatenation"]),
            description: "The tokens represent `StringBuilder` and `StringBuffer` objects used for building strings by appending data elements in sequence.".into(),
        },
        FewShotExample {
            tokens: s(&["."]),
            contexts: s(&[
                "returnBuffer.append(FieldMetaData.Decimal.SQ_CLOSE);",
                "jsonObject.getLong(Form.JSONMapping.FORM_TYPE_ID);",
                "date.getTime();",
                "fileReader.readLine();",
            ]),
            label: "Method Invocation Operator".into(),
            semantic_tags: s(&["Dot Notation", "Method Call", "Property Access"]),
            description: "The dot (.) operator is used to call methods or access properties of objects in Java.".into(),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptOptions {
    /// Language named in the prompt ("Java" in the published version).
    pub language: String,
    pub max_contexts: usize,
    pub few_shot: Vec<FewShotExample>,
}

impl Default for PromptOptions {
    fn default() -> Self {
        Self {
            language: "Java".into(),
            max_contexts: DEFAULT_MAX_CONTEXTS,
            few_shot: default_few_shot(),
        }
    }
}

fn render_example(out: &mut String, n: usize, ex: &FewShotExample) {
    out.push_str(&format!("{n}. **Tokens:** `{}`  \n", ex.tokens.join(", ")));
    out.push_str("   **Context Sentences:**\n");
    for c in &ex.contexts {
        out.push_str(&format!("   - {c}\n"));
    }
    out.push_str("   \n");
    out.push_str(&format!("   **Label:** {}  \n", ex.label));
    out.push_str(&format!("   **Semantic Tags:** {}  \n", ex.semantic_tags.join(", ")));
    out.push_str(&format!("   **Description:** {}\n", ex.description));
}

/// Builds the annotation prompt. `contexts` are expected in selection order
/// (see [`gather_contexts`]); anything past `max_contexts` is cut and a note
/// says how many were left out.
pub fn build_prompt(
    tokens: &[String],
    contexts: &[String],
    options: &PromptOptions,
) -> Result<String, AnnotateError> {
    if tokens.is_empty() {
        return Err(AnnotateError::EmptyCluster);
    }
    let lang = &options.language;
    let mut p = String::new();
    p.push_str(&format!(
        "You are analyzing a cluster of {lang} tokens and their context sentences. Each cluster has one or more unique tokens. Your task is to identify the role or function these tokens play within the context of the provided sentences. Focus on understanding what the tokens are achieving in the code and their syntactic or semantic significance.\n\n"
    ));
    p.push_str("**Guidelines for Analysis:**\n");
    p.push_str("1. **Tokens:** Review the provided tokens.\n");
    p.push_str("2. **Context Sentences:** Examine the context sentences to understand the usage of the tokens.\n");
    p.push_str("3. **Role Identification:** Determine the role the tokens play in the context sentences, including their syntactic and semantic significance.\n");
    p.push_str("4. **Concise Label:** Choose a descriptive label that accurately describes the function or role of the tokens in the code. Use specific terminology where applicable (e.g., `Buffer Manipulation`, `Method Invocation`, `Parameter Handling`).\n");
    p.push_str("5. **Semantic Tags:** Include 3-5 relevant semantic tags that describe what is being achieved in the context sentences.\n");
    p.push_str("6. **Description:** Provide a concise description (1-2 sentences) explaining the role of the tokens in the code.\n");
    p.push_str("7. ' ( ' would have label 'Opening Parenthesis' and ')' would have label 'Closing Parenthesis'\n\n");
    if !options.few_shot.is_empty() {
        p.push_str("### Examples from Previous Clusters:\n");
        for (i, ex) in options.few_shot.iter().enumerate() {
            if i > 0 {
                p.push('\n');
            }
            render_example(&mut p, i + 1, ex);
        }
        p.push('\n');
    }
    p.push_str("Based on the provided tokens and context sentences below, analyze the cluster and provide your response in the following JSON format:\n\n");
    p.push_str("{\n    \"Label\": \"Your concise label here\",\n    \"Semantic_Tags\": [\n        \"Tag1\",\n        \"Tag2\",\n        \"Tag3\",\n        \"Tag4\",\n        \"Tag5\"\n    ],\n    \"Description\": \"Your description here.\"\n}\n\n");
    p.push_str(&format!("Tokens: {}\n", tokens.join(", ")));
    p.push_str("All Context Sentences:\n");
    if contexts.is_empty() {
        p.push_str("(no contexts)\n");
    } else {
        let shown = contexts.len().min(options.max_contexts);
        for (i, c) in contexts.iter().take(shown).enumerate() {
            p.push_str(&format!("{}. {c}\n", i + 1));
        }
        if shown < contexts.len() {
            p.push_str(&format!(
                "(showing {shown} of {} context sentences)\n",
                contexts.len()
            ));
        }
    }
    p.push_str("\nEnsure your response is in valid JSON format and includes only the JSON object.\n");
    Ok(p)
}

/// Distinct token texts of a cluster (first-appearance order) and the
/// source lines containing its members, ordered so that a prefix of any
/// length covers as many distinct tokens as possible: the first line of
/// every token, then the second of every token, and so on.
pub fn gather_contexts(
    members: &[InstanceId],
    tokens: &TokenTable,
    corpus: &Corpus,
) -> Result<(Vec<String>, Vec<String>), AnnotateError> {
    let mut order: Vec<String> = Vec::new();
    let mut lines: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut sorted = members.to_vec();
    sorted.sort();
    for id in &sorted {
        let rec = tokens
            .get(id)
            .ok_or_else(|| AnnotateError::UnknownInstance(id.clone()))?;
        let snippet = corpus
            .get(&id.snippet_id)
            .ok_or_else(|| AnnotateError::UnknownInstance(id.clone()))?;
        let line = snippet.line_at(rec.start_byte).trim().to_owned();
        let entry = lines.entry(rec.text.clone()).or_insert_with(|| {
            order.push(rec.text.clone());
            Vec::new()
        });
        if !line.is_empty() && seen.insert((rec.text.clone(), line.clone())) {
            entry.push(line);
        }
    }
    let mut contexts: Vec<String> = Vec::new();
    let mut emitted: HashSet<&str> = HashSet::new();
    let mut round = 0;
    loop {
        let mut any = false;
        for t in &order {
            if let Some(line) = lines[t].get(round) {
                any = true;
                if emitted.insert(line) {
                    contexts.push(line.clone());
                }
            }
        }
        if !any {
            break;
        }
        round += 1;
    }
    Ok((order, contexts))
}
