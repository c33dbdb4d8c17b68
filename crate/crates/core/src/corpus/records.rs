use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Result, SyntacticLabeling, TokenInstance};
use crate::InstanceId;

/// One line of `tokens.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub snippet_id: String,
    pub token_idx: usize,
    pub text: String,
    pub start_byte: usize,
    pub end_byte: usize,
    pub tag: String,
}

impl TokenRecord {
    pub fn new(token: TokenInstance, tag: String) -> Self {
        Self {
            snippet_id: token.snippet_id,
            token_idx: token.token_idx,
            text: token.text,
            start_byte: token.start_byte,
            end_byte: token.end_byte,
            tag,
        }
    }

    pub fn id(&self) -> InstanceId {
        InstanceId::new(self.snippet_id.clone(), self.token_idx)
    }
}

pub fn write_token_records<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a TokenRecord>,
) -> Result<()> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| io(e.into()))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_token_records(path: &Path) -> Result<Vec<TokenRecord>> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TokenRecord =
            serde_json::from_str(&line).map_err(|source| CorpusError::Json {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
        records.push(record);
    }
    Ok(records)
}

/// Token texts and tags indexed by instance, as read back from `tokens.jsonl`.
#[derive(Debug, Clone, Default)]
pub struct TokenTable {
    records: BTreeMap<InstanceId, TokenRecord>,
}

impl TokenTable {
    pub fn new(records: impl IntoIterator<Item = TokenRecord>) -> Self {
        Self {
            records: records.into_iter().map(|r| (r.id(), r)).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(read_token_records(path)?))
    }

    pub fn get(&self, id: &InstanceId) -> Option<&TokenRecord> {
        self.records.get(id)
    }

    pub fn text(&self, id: &InstanceId) -> Option<&str> {
        self.records.get(id).map(|r| r.text.as_str())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TokenRecord> {
        self.records.values()
    }

    /// Token count per snippet.
    pub fn snippet_lengths(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in self.records.values() {
            *out.entry(r.snippet_id.clone()).or_insert(0) += 1;
        }
        out
    }

    /// Labeling whose vocabulary is the observed tags plus `declared`.
    pub fn labeling(&self, declared: impl IntoIterator<Item = String>) -> SyntacticLabeling {
        let mut labeling = SyntacticLabeling {
            tags: BTreeMap::new(),
            tag_vocabulary: declared.into_iter().collect(),
        };
        for (id, r) in &self.records {
            labeling.tag_vocabulary.insert(r.tag.clone());
            labeling.tags.insert(id.clone(), r.tag.clone());
        }
        labeling
    }
}
