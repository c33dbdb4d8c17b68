//! Source rewriting with origin tracking.
//!
//! A rewrite is a list of non-overlapping edits on the original text. Each
//! edit splices a sequence of pieces in place of an original byte range:
//! copies of other original ranges, replacements that stand in for one
//! original token, or fresh insertions. Tracking where every output byte
//! came from is what makes the token correspondence exact.

use std::ops::Range;

use crate::corpus::TokenInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Piece {
    Copy(Range<usize>),
    /// New text standing in for the original token spanning `orig`.
    Replace { orig: Range<usize>, text: String },
    Insert(String),
}

#[derive(Debug, Clone)]
struct Edit {
    range: Range<usize>,
    pieces: Vec<Piece>,
    seq: usize,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Rewrite {
    edits: Vec<Edit>,
}

impl Rewrite {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn splice(&mut self, range: Range<usize>, pieces: Vec<Piece>) {
        let seq = self.edits.len();
        self.edits.push(Edit { range, pieces, seq });
    }

    pub fn insert(&mut self, at: usize, text: impl Into<String>) {
        self.splice(at..at, vec![Piece::Insert(text.into())]);
    }

    pub fn replace_token(&mut self, range: Range<usize>, text: impl Into<String>) {
        let orig = range.clone();
        self.splice(
            range,
            vec![Piece::Replace {
                orig,
                text: text.into(),
            }],
        );
    }

    /// Flattens the edits into a piece list covering the whole output.
    /// Fails if two edits overlap.
    pub fn into_pieces(mut self, source_len: usize) -> Result<Vec<Piece>, String> {
        self.edits
            .sort_by_key(|e| (e.range.start, !e.range.is_empty(), e.seq));
        let mut pieces = Vec::new();
        let mut pos = 0;
        for e in self.edits {
            if e.range.start < pos {
                return Err(format!(
                    "overlapping edits at byte {} (previous edit ends at {pos})",
                    e.range.start
                ));
            }
            if e.range.end > source_len {
                return Err(format!("edit range {:?} beyond source", e.range));
            }
            if e.range.start > pos {
                pieces.push(Piece::Copy(pos..e.range.start));
            }
            pieces.extend(e.pieces);
            pos = e.range.end;
        }
        if pos < source_len {
            pieces.push(Piece::Copy(pos..source_len));
        }
        Ok(pieces)
    }
}

/// Output text plus the output span of every piece.
pub(crate) struct Rendered {
    pub text: String,
    spans: Vec<(Range<usize>, Piece)>,
}

pub(crate) fn render(source: &str, pieces: Vec<Piece>) -> Rendered {
    let mut text = String::with_capacity(source.len() + 64);
    let mut spans = Vec::with_capacity(pieces.len());
    for p in pieces {
        let start = text.len();
        match &p {
            Piece::Copy(r) => text.push_str(&source[r.clone()]),
            Piece::Replace { text: t, .. } | Piece::Insert(t) => text.push_str(t),
        }
        if text.len() > start {
            spans.push((start..text.len(), p));
        }
    }
    Rendered { text, spans }
}

/// Original token index for each perturbed token, `None` when the token
/// was created by the rewrite. Each original token is claimed at most once.
pub(crate) fn correspond(
    rendered: &Rendered,
    original: &[TokenInstance],
    perturbed: &[TokenInstance],
) -> Vec<Option<usize>> {
    let by_span: std::collections::HashMap<(usize, usize), usize> = original
        .iter()
        .enumerate()
        .map(|(i, t)| ((t.start_byte, t.end_byte), i))
        .collect();
    let mut claimed = vec![false; original.len()];
    perturbed
        .iter()
        .map(|tok| {
            let (s, e) = (tok.start_byte, tok.end_byte);
            let idx = rendered.spans.partition_point(|(r, _)| r.end <= s);
            let (out, piece) = rendered.spans.get(idx)?;
            if e > out.end || s < out.start {
                return None;
            }
            let found = match piece {
                Piece::Copy(orig) => {
                    let os = orig.start + (s - out.start);
                    by_span
                        .get(&(os, os + (e - s)))
                        .copied()
                        .filter(|&i| original[i].text == tok.text)
                }
                Piece::Replace { orig, .. } if s == out.start && e == out.end => {
                    by_span.get(&(orig.start, orig.end)).copied()
                }
                _ => None,
            }?;
            if claimed[found] {
                return None;
            }
            claimed[found] = true;
            Some(found)
        })
        .collect()
}
