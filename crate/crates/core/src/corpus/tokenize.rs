use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tree_sitter::{Node, Parser, Tree};

use super::{Corpus, CorpusError, Language, Result, Snippet, SyntacticLabeling};
use crate::InstanceId;

/// One occurrence of a parser token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenInstance {
    pub snippet_id: String,
    pub token_idx: usize,
    pub text: String,
    pub start_byte: usize,
    pub end_byte: usize,
}

impl TokenInstance {
    pub fn id(&self) -> InstanceId {
        InstanceId::new(self.snippet_id.clone(), self.token_idx)
    }
}

/// Node kinds that become a single token even though the grammar gives them
/// children (string contents, escape sequences, interpolations).
fn is_atomic_kind(kind: &str) -> bool {
    matches!(
        kind,
        "string_literal"
            | "character_literal"
            | "char_literal"
            | "raw_string_literal"
            | "string"
            | "template_string"
            | "encapsed_string"
            | "heredoc"
            | "nowdoc"
            | "regex"
            | "text_block"
    ) || kind.ends_with("comment")
}

/// Parses `source` and fails if the tree holds any error or missing node.
pub fn parse(language: Language, snippet_id: &str, source: &str) -> Result<Tree> {
    let mut parser = Parser::new();
    parser
        .set_language(&language.grammar())
        .map_err(|_| CorpusError::Grammar {
            snippet_id: snippet_id.to_owned(),
        })?;
    let tree = parser
        .parse(source, None)
        .ok_or_else(|| CorpusError::Grammar {
            snippet_id: snippet_id.to_owned(),
        })?;
    if tree.root_node().has_error() {
        return Err(CorpusError::Parse {
            snippet_id: snippet_id.to_owned(),
            spans: error_spans(tree.root_node()),
        });
    }
    Ok(tree)
}

fn error_spans(root: Node) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node.is_error() || node.is_missing() {
            spans.push((node.start_byte(), node.end_byte()));
            continue;
        }
        if node.has_error() {
            let mut cursor = node.walk();
            stack.extend(node.children(&mut cursor));
        }
    }
    spans.sort_unstable();
    spans
}

/// Calls `visit` on every token node of `tree` in source order.
pub(crate) fn for_each_token<'t>(tree: &'t Tree, source: &str, mut visit: impl FnMut(Node<'t>)) {
    let mut cursor = tree.walk();
    'outer: loop {
        let node = cursor.node();
        let is_token = node.child_count() == 0 || is_atomic_kind(node.kind());
        if is_token {
            let text = &source[node.start_byte()..node.end_byte()];
            if !text.trim().is_empty() {
                visit(node);
            }
        } else if cursor.goto_first_child() {
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                continue 'outer;
            }
            if !cursor.goto_parent() {
                break 'outer;
            }
        }
    }
}

/// Tag for a token node: its own kind when named, otherwise the kind of the
/// nearest named ancestor.
pub(crate) fn tag_of(node: Node) -> String {
    let mut current = node;
    while !current.is_named() {
        match current.parent() {
            Some(parent) => current = parent,
            None => break,
        }
    }
    current.kind().to_owned()
}

/// Tokens of `snippet` paired with their syntactic tags.
pub fn tokenize_tagged(snippet: &Snippet) -> Result<Vec<(TokenInstance, String)>> {
    let tree = parse(snippet.language, &snippet.id, &snippet.source)?;
    let mut out = Vec::new();
    for_each_token(&tree, &snippet.source, |node| {
        let (start, end) = (node.start_byte(), node.end_byte());
        out.push((
            TokenInstance {
                snippet_id: snippet.id.clone(),
                token_idx: out.len(),
                text: snippet.source[start..end].to_owned(),
                start_byte: start,
                end_byte: end,
            },
            tag_of(node),
        ));
    });
    Ok(out)
}

/// Leaf tokens of the concrete syntax tree in source order. Whitespace is
/// dropped; comments and string literals are kept as single tokens.
pub fn tokenize(snippet: &Snippet) -> Result<Vec<TokenInstance>> {
    Ok(tokenize_tagged(snippet)?.into_iter().map(|(t, _)| t).collect())
}

/// Tokenizes every snippet in parallel; the result is in snippet-id order.
pub fn tokenize_corpus(corpus: &Corpus) -> Result<BTreeMap<String, Vec<(TokenInstance, String)>>> {
    let snippets: Vec<&Snippet> = corpus.iter().collect();
    snippets
        .par_iter()
        .map(|s| tokenize_tagged(s).map(|t| (s.id.clone(), t)))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

pub fn syntactic_tags(corpus: &Corpus) -> Result<SyntacticLabeling> {
    let tokenized = tokenize_corpus(corpus)?;
    let mut tag_vocabulary: BTreeSet<String> = corpus
        .languages()
        .into_iter()
        .flat_map(Language::declared_tags)
        .collect();
    let mut tags = BTreeMap::new();
    for (token, tag) in tokenized.into_values().flatten() {
        tag_vocabulary.insert(tag.clone());
        tags.insert(token.id(), tag);
    }
    Ok(SyntacticLabeling {
        tags,
        tag_vocabulary,
    })
}
