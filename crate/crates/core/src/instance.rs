use std::fmt;

use serde::{Deserialize, Serialize};

/// One token occurrence, identified by its snippet and ordinal position.
///
/// Serialized as a two-element array `["path/File.java", 3]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(String, usize)", into = "(String, usize)")]
pub struct InstanceId {
    pub snippet_id: String,
    pub token_idx: usize,
}

impl InstanceId {
    pub fn new(snippet_id: impl Into<String>, token_idx: usize) -> Self {
        Self {
            snippet_id: snippet_id.into(),
            token_idx,
        }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.snippet_id, self.token_idx)
    }
}

impl From<(String, usize)> for InstanceId {
    fn from((snippet_id, token_idx): (String, usize)) -> Self {
        Self {
            snippet_id,
            token_idx,
        }
    }
}

impl From<(&str, usize)> for InstanceId {
    fn from((snippet_id, token_idx): (&str, usize)) -> Self {
        Self::new(snippet_id, token_idx)
    }
}

impl From<InstanceId> for (String, usize) {
    fn from(id: InstanceId) -> Self {
        (id.snippet_id, id.token_idx)
    }
}
