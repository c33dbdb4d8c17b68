//! File formats shared with the external model runner.
//!
//! An activation file-set holds one layer of one model:
//!
//! | file            | content                                                      |
//! |-----------------|--------------------------------------------------------------|
//! | manifest (JSON) | version, model, layer, `dim`, `count`, dtype, byte order, paths |
//! | token table     | JSONL, row `i` = `{"snippet_id", "token_idx"}` of matrix row `i` |
//! | matrix          | `count * dim` IEEE-754 float32, little-endian, row-major      |
//!
//! The matrix file must be exactly `count * dim * 4` bytes. Attribution scores
//! travel as JSONL, one record per snippet.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::InstanceId;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt matrix {path}: expected {expected} bytes, found {actual}")]
    CorruptMatrix {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("token table {path}: {message}")]
    TokenTable { path: PathBuf, message: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("attribution record for {snippet_id}: expected {expected} scores, found {actual}")]
    ScoreCount {
        snippet_id: String,
        expected: usize,
        actual: usize,
    },
    #[error("attribution record for unknown snippet {0}")]
    UnknownSnippet(String),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationManifest {
    pub format_version: u32,
    pub model_id: String,
    pub layer: u32,
    pub dim: usize,
    pub count: usize,
    pub dtype: String,
    pub byte_order: String,
    /// Relative to the manifest's directory.
    pub token_table: String,
    /// Relative to the manifest's directory.
    pub matrix_file: String,
}

impl ActivationManifest {
    pub fn matrix_bytes(&self) -> Option<u64> {
        (self.count as u64)
            .checked_mul(self.dim as u64)
            .and_then(|n| n.checked_mul(4))
    }
}

/// Per-token activations of one layer: row `i` of `matrix` belongs to `rows[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDataset {
    pub manifest: ActivationManifest,
    pub rows: Vec<InstanceId>,
    pub matrix: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct TokenTableRow {
    snippet_id: String,
    token_idx: usize,
}

impl ActivationDataset {
    /// Dataset with default sibling file names `tokens.jsonl` and `matrix.f32`.
    pub fn new(
        model_id: impl Into<String>,
        layer: u32,
        dim: usize,
        rows: Vec<InstanceId>,
        matrix: Vec<f32>,
    ) -> Result<Self> {
        let dataset = Self {
            manifest: ActivationManifest {
                format_version: FORMAT_VERSION,
                model_id: model_id.into(),
                layer,
                dim,
                count: rows.len(),
                dtype: "f32".into(),
                byte_order: "little".into(),
                token_table: "tokens.jsonl".into(),
                matrix_file: "matrix.f32".into(),
            },
            rows,
            matrix,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn dim(&self) -> usize {
        self.manifest.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let d = self.dim();
        &self.matrix[i * d..(i + 1) * d]
    }

    pub fn row_index(&self) -> HashMap<&InstanceId, usize> {
        self.rows.iter().enumerate().map(|(i, id)| (id, i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        if m.format_version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedFormat(format!(
                "format_version {}",
                m.format_version
            )));
        }
        if m.dtype != "f32" || m.byte_order != "little" {
            return Err(FormatError::UnsupportedFormat(format!(
                "dtype {} / byte order {}",
                m.dtype, m.byte_order
            )));
        }
        if m.dim == 0 {
            return Err(FormatError::Invalid("dim must be positive".into()));
        }
        if m.count != self.rows.len() {
            return Err(FormatError::Invalid(format!(
                "manifest count {} but {} rows",
                m.count,
                self.rows.len()
            )));
        }
        if self.matrix.len() != m.count * m.dim {
            return Err(FormatError::Invalid(format!(
                "matrix holds {} values, expected {} x {}",
                self.matrix.len(),
                m.count,
                m.dim
            )));
        }
        if let Some(pos) = self.matrix.iter().position(|v| !v.is_finite()) {
            return Err(FormatError::Invalid(format!(
                "non-finite value at row {} column {}",
                pos / m.dim,
                pos % m.dim
            )));
        }
        let mut seen = HashSet::with_capacity(self.rows.len());
        for id in &self.rows {
            if !seen.insert(id) {
                return Err(FormatError::Invalid(format!("duplicate row for {id}")));
            }
        }
        Ok(())
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn sibling(manifest_path: &Path, name: &str) -> PathBuf {
    manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(name)
}

/// Writes the manifest to `manifest_path` and the token table and matrix
/// next to it. Refuses datasets that fail validation.
pub fn write_activations(dataset: &ActivationDataset, manifest_path: &Path) -> Result<()> {
    dataset.validate()?;
    let m = &dataset.manifest;

    let table_path = sibling(manifest_path, &m.token_table);
    let mut table = BufWriter::new(File::create(&table_path).map_err(io_err(&table_path))?);
    for id in &dataset.rows {
        let row = TokenTableRow {
            snippet_id: id.snippet_id.clone(),
            token_idx: id.token_idx,
        };
        serde_json::to_writer(&mut table, &row).map_err(|e| io_err(&table_path)(e.into()))?;
        table.write_all(b"\n").map_err(io_err(&table_path))?;
    }
    table.flush().map_err(io_err(&table_path))?;

    let matrix_path = sibling(manifest_path, &m.matrix_file);
    let mut matrix = BufWriter::new(File::create(&matrix_path).map_err(io_err(&matrix_path))?);
    for v in &dataset.matrix {
        matrix
            .write_all(&v.to_le_bytes())
            .map_err(io_err(&matrix_path))?;
    }
    matrix.flush().map_err(io_err(&matrix_path))?;

    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    fs::write(manifest_path, text).map_err(io_err(manifest_path))
}

pub fn read_manifest(manifest_path: &Path) -> Result<ActivationManifest> {
    let text = fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| FormatError::Json {
            path: manifest_path.to_path_buf(),
            line: 1,
            source,
        })?;
    match raw.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(FormatError::UnsupportedFormat(format!(
                "format_version {v} (supported: {FORMAT_VERSION})"
            )))
        }
        None => {
            return Err(FormatError::UnsupportedFormat(
                "manifest has no format_version".into(),
            ))
        }
    }
    serde_json::from_value(raw).map_err(|source| FormatError::Json {
        path: manifest_path.to_path_buf(),
        line: 1,
        source,
    })
}

/// Reads and validates a file-set. Sizes are checked against the manifest
/// before any body is loaded.
pub fn read_activations(manifest_path: &Path) -> Result<ActivationDataset> {
    let manifest = read_manifest(manifest_path)?;
    if manifest.dtype != "f32" || manifest.byte_order != "little" {
        return Err(FormatError::UnsupportedFormat(format!(
            "dtype {} / byte order {}",
            manifest.dtype, manifest.byte_order
        )));
    }
    if manifest.dim == 0 {
        return Err(FormatError::Invalid("dim must be positive".into()));
    }

    let matrix_path = sibling(manifest_path, &manifest.matrix_file);
    let expected = manifest
        .matrix_bytes()
        .ok_or_else(|| FormatError::Invalid("count x dim overflows".into()))?;
    let actual = fs::metadata(&matrix_path)
        .map_err(io_err(&matrix_path))?
        .len();
    if actual != expected {
        return Err(FormatError::CorruptMatrix {
            path: matrix_path,
            expected,
            actual,
        });
    }
    let mut bytes = Vec::with_capacity(expected as usize);
    File::open(&matrix_path)
        .map_err(io_err(&matrix_path))?
        .take(expected)
        .read_to_end(&mut bytes)
        .map_err(io_err(&matrix_path))?;
    if bytes.len() as u64 != expected {
        return Err(FormatError::CorruptMatrix {
            path: matrix_path,
            expected,
            actual: bytes.len() as u64,
        });
    }
    let matrix: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    let table_path = sibling(manifest_path, &manifest.token_table);
    let reader = BufReader::new(File::open(&table_path).map_err(io_err(&table_path))?);
    let mut rows = Vec::with_capacity(manifest.count);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(&table_path))?;
        if line.is_empty() {
            continue;
        }
        if rows.len() == manifest.count {
            return Err(FormatError::TokenTable {
                path: table_path,
                message: format!("more than the {} rows declared", manifest.count),
            });
        }
        let row: TokenTableRow = serde_json::from_str(&line).map_err(|source| FormatError::Json {
            path: table_path.clone(),
            line: i + 1,
            source,
        })?;
        rows.push(InstanceId::new(row.snippet_id, row.token_idx));
    }
    if rows.len() != manifest.count {
        return Err(FormatError::TokenTable {
            path: table_path,
            message: format!("{} rows, manifest declares {}", rows.len(), manifest.count),
        });
    }

    let dataset = ActivationDataset {
        manifest,
        rows,
        matrix,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Per-token attribution scores for one snippet's prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub snippet_id: String,
    pub predicted_label: String,
    pub true_label: String,
    pub scores: Vec<f64>,
}

pub fn write_attributions(path: &Path, records: &[AttributionRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for r in records {
        if r.scores.iter().any(|s| !s.is_finite()) {
            return Err(FormatError::Invalid(format!(
                "non-finite attribution score for {}",
                r.snippet_id
            )));
        }
        serde_json::to_writer(&mut out, r).map_err(|e| io_err(path)(e.into()))?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Reads attribution JSONL and checks every record's score count against
/// the snippet's token count.
pub fn read_attributions(
    path: &Path,
    token_counts: &BTreeMap<String, usize>,
) -> Result<Vec<AttributionRecord>> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AttributionRecord =
            serde_json::from_str(&line).map_err(|source| FormatError::Json {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
        let expected = *token_counts
            .get(&record.snippet_id)
            .ok_or_else(|| FormatError::UnknownSnippet(record.snippet_id.clone()))?;
        if record.scores.len() != expected {
            return Err(FormatError::ScoreCount {
                snippet_id: record.snippet_id,
                expected,
                actual: record.scores.len(),
            });
        }
        records.push(record);
    }
    Ok(records)
}
