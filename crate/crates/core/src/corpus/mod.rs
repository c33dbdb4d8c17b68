//! Source snippets, parser tokens and their syntactic tags.

mod language;
mod records;
pub(crate) mod tokenize;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use language::{Language, UnknownLanguage};
pub use records::{read_token_records, write_token_records, TokenRecord, TokenTable};
pub use tokenize::{parse, syntactic_tags, tokenize, tokenize_corpus, tokenize_tagged, TokenInstance};

use crate::InstanceId;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty corpus: no snippets found under {0}")]
    EmptyCorpus(PathBuf),
    #[error("{snippet_id}: parse errors at byte spans {spans:?}")]
    Parse {
        snippet_id: String,
        spans: Vec<(usize, usize)>,
    },
    #[error("{snippet_id}: grammar rejected by parser")]
    Grammar { snippet_id: String },
    #[error("duplicate snippet id `{0}`")]
    DuplicateId(String),
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    /// Corpus-relative path with `/` separators.
    pub id: String,
    pub language: Language,
    pub source: String,
}

impl Snippet {
    pub fn new(id: impl Into<String>, language: Language, source: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            language,
            source: source.into(),
        }
    }

    /// The full source line containing `byte`, without its terminator.
    pub fn line_at(&self, byte: usize) -> &str {
        let byte = byte.min(self.source.len());
        let start = self.source[..byte].rfind('\n').map_or(0, |i| i + 1);
        let end = self.source[byte..]
            .find('\n')
            .map_or(self.source.len(), |i| byte + i);
        self.source[start..end].trim_end_matches('\r')
    }
}

/// Snippets keyed by id; iteration order is id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    snippets: BTreeMap<String, Snippet>,
}

impl Corpus {
    pub fn from_snippets(snippets: impl IntoIterator<Item = Snippet>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for snippet in snippets {
            if map.contains_key(&snippet.id) {
                return Err(CorpusError::DuplicateId(snippet.id));
            }
            map.insert(snippet.id.clone(), snippet);
        }
        Ok(Self { snippets: map })
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Snippet> {
        self.snippets.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Snippet> {
        self.snippets.values()
    }

    pub fn languages(&self) -> BTreeSet<Language> {
        self.iter().map(|s| s.language).collect()
    }
}

/// A file that was not turned into a snippet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub skipped: Vec<SkippedFile>,
}

/// Loads every file under `root` whose extension maps to a known language.
///
/// Files in other languages, files rejected by `language_filter`, and files
/// that cannot be read as UTF-8 are listed in the report instead of failing
/// the load. A load that yields no snippet at all is an error.
pub fn load_corpus(
    root: &Path,
    language_filter: Option<&BTreeSet<Language>>,
) -> Result<(Corpus, LoadReport)> {
    let mut files = Vec::new();
    collect_files(root, &mut files)?;
    files.sort();

    let mut report = LoadReport::default();
    let mut snippets = Vec::new();
    for path in files {
        let Some(language) = Language::from_path(&path) else {
            report.skipped.push(SkippedFile {
                path,
                reason: "unrecognized extension".into(),
            });
            continue;
        };
        if language_filter.is_some_and(|f| !f.contains(&language)) {
            report.skipped.push(SkippedFile {
                path,
                reason: format!("{language} excluded by filter"),
            });
            continue;
        }
        let source = match fs::read(&path).map(String::from_utf8) {
            Ok(Ok(text)) => text,
            Ok(Err(_)) => {
                log::warn!("{}: not valid UTF-8, skipped", path.display());
                report.skipped.push(SkippedFile {
                    path,
                    reason: "not valid UTF-8".into(),
                });
                continue;
            }
            Err(err) => {
                log::warn!("{}: {err}, skipped", path.display());
                report.skipped.push(SkippedFile {
                    path,
                    reason: err.to_string(),
                });
                continue;
            }
        };
        snippets.push(Snippet::new(relative_id(root, &path), language, source));
    }

    if snippets.is_empty() {
        return Err(CorpusError::EmptyCorpus(root.to_path_buf()));
    }
    Ok((Corpus::from_snippets(snippets)?, report))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let io_err = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    if dir.is_file() {
        out.push(dir.to_path_buf());
        return Ok(());
    }
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

fn relative_id(root: &Path, path: &Path) -> String {
    let rel = if root.is_file() {
        path.file_name().map(Path::new).unwrap_or(path)
    } else {
        path.strip_prefix(root).unwrap_or(path)
    };
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Ground-truth syntactic tag of every token instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SyntacticLabeling {
    pub tags: BTreeMap<InstanceId, String>,
    pub tag_vocabulary: BTreeSet<String>,
}

impl SyntacticLabeling {
    pub fn tag(&self, id: &InstanceId) -> Option<&str> {
        self.tags.get(id).map(String::as_str)
    }
}
