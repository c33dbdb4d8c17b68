use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PerturbError, PerturbationKind};
use crate::InstanceId;

/// Token correspondence between one original snippet and its perturbed
/// version. Indices are token ordinals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrespondenceMap {
    pub original_snippet_id: String,
    pub perturbed_snippet_id: String,
    pub kind: PerturbationKind,
    /// Set when the transform had nothing to rewrite in this snippet.
    #[serde(default)]
    pub inapplicable: bool,
    /// `(original_idx, perturbed_idx)`, ascending by original index.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_original: Vec<usize>,
    pub unmatched_perturbed: Vec<usize>,
}

impl CorrespondenceMap {
    pub fn identity(snippet_id: &str, kind: PerturbationKind, tokens: usize) -> Self {
        Self {
            original_snippet_id: snippet_id.to_owned(),
            perturbed_snippet_id: snippet_id.to_owned(),
            kind,
            inapplicable: true,
            pairs: (0..tokens).map(|i| (i, i)).collect(),
            unmatched_original: Vec::new(),
            unmatched_perturbed: Vec::new(),
        }
    }

    /// The same correspondence seen from the perturbed side.
    pub fn inverted(&self) -> Self {
        let mut pairs: Vec<(usize, usize)> = self.pairs.iter().map(|&(a, b)| (b, a)).collect();
        pairs.sort_unstable();
        Self {
            original_snippet_id: self.perturbed_snippet_id.clone(),
            perturbed_snippet_id: self.original_snippet_id.clone(),
            kind: self.kind,
            inapplicable: self.inapplicable,
            pairs,
            unmatched_original: self.unmatched_perturbed.clone(),
            unmatched_perturbed: self.unmatched_original.clone(),
        }
    }

    /// Checks the partial-bijection invariant against both token counts.
    pub fn check(&self, original_len: usize, perturbed_len: usize) -> Result<(), String> {
        let mut seen_o = vec![false; original_len];
        let mut seen_p = vec![false; perturbed_len];
        let mark = |seen: &mut Vec<bool>, i: usize, side: &str| {
            match seen.get_mut(i) {
                Some(s) if !*s => {
                    *s = true;
                    Ok(())
                }
                Some(_) => Err(format!("{side} token {i} listed twice")),
                None => Err(format!("{side} token {i} out of range")),
            }
        };
        for &(o, p) in &self.pairs {
            mark(&mut seen_o, o, "original")?;
            mark(&mut seen_p, p, "perturbed")?;
        }
        for &o in &self.unmatched_original {
            mark(&mut seen_o, o, "original")?;
        }
        for &p in &self.unmatched_perturbed {
            mark(&mut seen_p, p, "perturbed")?;
        }
        if let Some(i) = seen_o.iter().position(|s| !s) {
            return Err(format!("original token {i} not covered"));
        }
        if let Some(i) = seen_p.iter().position(|s| !s) {
            return Err(format!("perturbed token {i} not covered"));
        }
        Ok(())
    }
}

/// Where a perturbed token came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Original(InstanceId),
    /// Created by the transform; has no original counterpart.
    Created(InstanceId),
}

/// Original snippet id, perturbed-to-original token index, created tokens.
type SnippetIndex = (String, HashMap<usize, usize>, BTreeSet<usize>);

/// Lookup from perturbed instances to their origin across many snippets.
#[derive(Debug, Clone, Default)]
pub struct CorrespondenceIndex {
    by_snippet: HashMap<String, SnippetIndex>,
}

impl CorrespondenceIndex {
    pub fn new<'a>(maps: impl IntoIterator<Item = &'a CorrespondenceMap>) -> Self {
        let by_snippet = maps
            .into_iter()
            .map(|m| {
                (
                    m.perturbed_snippet_id.clone(),
                    (
                        m.original_snippet_id.clone(),
                        m.pairs.iter().map(|&(o, p)| (p, o)).collect(),
                        m.unmatched_perturbed.iter().copied().collect(),
                    ),
                )
            })
            .collect();
        Self { by_snippet }
    }

    /// `Err` carries the snippet id when the snippet or token is unmapped.
    pub fn origin(&self, id: &InstanceId) -> Result<Origin, String> {
        let (orig_snippet, pairs, created) = self
            .by_snippet
            .get(&id.snippet_id)
            .ok_or_else(|| id.snippet_id.clone())?;
        if let Some(&o) = pairs.get(&id.token_idx) {
            Ok(Origin::Original(InstanceId::new(orig_snippet.clone(), o)))
        } else if created.contains(&id.token_idx) {
            Ok(Origin::Created(id.clone()))
        } else {
            Err(id.snippet_id.clone())
        }
    }
}

pub fn write_maps(path: &Path, maps: &[CorrespondenceMap]) -> Result<(), PerturbError> {
    let io = |source| PerturbError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for m in maps {
        serde_json::to_writer(&mut out, m).map_err(|e| io(e.into()))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_maps(path: &Path) -> Result<Vec<CorrespondenceMap>, PerturbError> {
    let io = |source| PerturbError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut maps = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        maps.push(serde_json::from_str(&line).map_err(|e| PerturbError::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(maps)
}
