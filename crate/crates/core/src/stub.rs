//! Deterministic stand-in activations for running the pipeline without a
//! model.
//!
//! A token's vector is a fixed pseudo-random embedding of its text, plus
//! smaller contributions from its syntax tag and its two neighbours in the
//! snippet. Equal inputs give bit-identical vectors on every platform.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation_io::{ActivationDataset, FormatError};
use crate::corpus::{TokenRecord, TokenTable};
use crate::perturb::CorrespondenceMap;
use crate::InstanceId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubConfig {
    pub dim: usize,
    pub seed: u64,
    pub tag_weight: f32,
    pub context_weight: f32,
    pub model_id: String,
    pub layer: u32,
}

impl Default for StubConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            seed: 42,
            tag_weight: 0.5,
            context_weight: 0.25,
            model_id: "stub-hashed".into(),
            layer: 0,
        }
    }
}

const SNIPPET_START: &str = "\u{2}start";
const SNIPPET_END: &str = "\u{3}end";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct Embedder<'a> {
    config: &'a StubConfig,
    cache: HashMap<(u8, String), Vec<f32>>,
}

impl<'a> Embedder<'a> {
    fn new(config: &'a StubConfig) -> Self {
        Self {
            config,
            cache: HashMap::new(),
        }
    }

    /// Uniform vector in `[-1, 1]^dim` keyed by a namespace and a string.
    fn embed(&mut self, space: u8, key: &str) -> &[f32] {
        let config = self.config;
        self.cache
            .entry((space, key.to_owned()))
            .or_insert_with(|| {
                let mut bytes = vec![space];
                bytes.extend_from_slice(key.as_bytes());
                let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&bytes) ^ config.seed);
                (0..config.dim).map(|_| rng.gen_range(-1.0f32..=1.0)).collect()
            })
    }

    fn token_vector(&mut self, token: &TokenRecord, prev: &str, next: &str) -> Vec<f32> {
        let (tw, cw) = (self.config.tag_weight, self.config.context_weight);
        let mut v = self.embed(0, &token.text).to_vec();
        for (acc, t) in v.iter_mut().zip(self.embed(1, &token.tag)) {
            *acc += tw * t;
        }
        for neighbour in [prev, next] {
            for (acc, t) in v.iter_mut().zip(self.embed(0, neighbour)) {
                *acc += cw * t;
            }
        }
        v
    }
}

/// Hashed activations for every token of `tokens`, rows in token-table
/// order.
pub fn stub_activations(tokens: &TokenTable, config: &StubConfig) -> Result<ActivationDataset, FormatError> {
    let records: Vec<&TokenRecord> = tokens.iter().collect();
    let mut embedder = Embedder::new(config);
    let mut rows = Vec::with_capacity(records.len());
    let mut matrix = Vec::with_capacity(records.len() * config.dim);
    for (i, r) in records.iter().enumerate() {
        let same = |j: Option<usize>| {
            j.and_then(|j| records.get(j))
                .filter(|o| o.snippet_id == r.snippet_id)
                .map(|o| o.text.as_str())
        };
        let prev = same(i.checked_sub(1)).unwrap_or(SNIPPET_START);
        let next = same(Some(i + 1)).unwrap_or(SNIPPET_END);
        matrix.extend(embedder.token_vector(r, prev, next));
        rows.push(r.id());
    }
    ActivationDataset::new(config.model_id.clone(), config.layer, config.dim, rows, matrix)
}

/// Activations for a perturbed corpus that reuse the original row of every
/// token with a counterpart, so that only created tokens get fresh vectors.
pub fn transfer_activations(
    original: &ActivationDataset,
    perturbed: &TokenTable,
    maps: &[CorrespondenceMap],
    config: &StubConfig,
) -> Result<ActivationDataset, FormatError> {
    if original.dim() != config.dim {
        return Err(FormatError::Invalid(format!(
            "original activations have dimension {}, stub config asks for {}",
            original.dim(),
            config.dim
        )));
    }
    let index = original.row_index();
    let mut origin: HashMap<InstanceId, InstanceId> = HashMap::new();
    for m in maps {
        for &(o, p) in &m.pairs {
            origin.insert(
                InstanceId::new(m.perturbed_snippet_id.clone(), p),
                InstanceId::new(m.original_snippet_id.clone(), o),
            );
        }
    }
    let fresh = stub_activations(perturbed, config)?;
    let mut matrix = Vec::with_capacity(fresh.matrix.len());
    for (i, id) in fresh.rows.iter().enumerate() {
        let row = match origin.get(id).and_then(|o| index.get(o)) {
            Some(&r) => original.row(r),
            None => fresh.row(i),
        };
        matrix.extend_from_slice(row);
    }
    ActivationDataset::new(
        original.manifest.model_id.clone(),
        original.manifest.layer,
        config.dim,
        fresh.rows,
        matrix,
    )
}
