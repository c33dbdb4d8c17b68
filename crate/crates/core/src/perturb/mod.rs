//! Semantic-preserving source transformations.
//!
//! Every transform produces the rewritten snippet together with a token
//! correspondence map so that cluster membership can be compared across the
//! rewrite by token instance rather than by text. Outputs are reparsed and
//! rejected if the grammar reports any error node.

mod correspondence;
mod edit;
mod pointer;
mod rename;
mod statements;
mod switch;
mod syntax;
mod validate;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree_sitter::Tree;

pub use correspondence::{read_maps, write_maps, CorrespondenceIndex, CorrespondenceMap, Origin};
pub use validate::{validate_semantics_preserved, ValidationFailure};

use crate::corpus::{parse, tokenize, Corpus, CorpusError, Language, Snippet};

pub const DEFAULT_NOOP_DENSITY: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerturbationKind {
    DeterministicIdentifierRenaming,
    IdentifierCasingVariation,
    MinimalCasingPerturbation,
    CanonicalIdentifierSubstitution,
    VariableScopeReassignment,
    InstrumentationInsertion,
    BooleanExpressionNegation,
    PointerIntroduction,
    StatementOrderRandomization,
    SwitchToConditional,
    NoOpStatementInjection,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 11] = [
        Self::DeterministicIdentifierRenaming,
        Self::IdentifierCasingVariation,
        Self::MinimalCasingPerturbation,
        Self::CanonicalIdentifierSubstitution,
        Self::VariableScopeReassignment,
        Self::InstrumentationInsertion,
        Self::BooleanExpressionNegation,
        Self::PointerIntroduction,
        Self::StatementOrderRandomization,
        Self::SwitchToConditional,
        Self::NoOpStatementInjection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DeterministicIdentifierRenaming => "DeterministicIdentifierRenaming",
            Self::IdentifierCasingVariation => "IdentifierCasingVariation",
            Self::MinimalCasingPerturbation => "MinimalCasingPerturbation",
            Self::CanonicalIdentifierSubstitution => "CanonicalIdentifierSubstitution",
            Self::VariableScopeReassignment => "VariableScopeReassignment",
            Self::InstrumentationInsertion => "InstrumentationInsertion",
            Self::BooleanExpressionNegation => "BooleanExpressionNegation",
            Self::PointerIntroduction => "PointerIntroduction",
            Self::StatementOrderRandomization => "StatementOrderRandomization",
            Self::SwitchToConditional => "SwitchToConditional",
            Self::NoOpStatementInjection => "NoOpStatementInjection",
        }
    }

    /// Human-readable name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Self::DeterministicIdentifierRenaming => "Deterministic Identifier Renaming",
            Self::IdentifierCasingVariation => "Identifier Casing Variation",
            Self::MinimalCasingPerturbation => "Minimal Casing Perturbation",
            Self::CanonicalIdentifierSubstitution => "Canonical Identifier Substitution",
            Self::VariableScopeReassignment => "Variable Scope Reassignment",
            Self::InstrumentationInsertion => "Instrumentation Insertion",
            Self::BooleanExpressionNegation => "Boolean Expression Negation",
            Self::PointerIntroduction => "Pointer Introduction",
            Self::StatementOrderRandomization => "Statement Order Randomization",
            Self::SwitchToConditional => "Switch-to-Conditional Transformation",
            Self::NoOpStatementInjection => "No-Op Statement Injection",
        }
    }

    pub fn supported_languages(self) -> &'static [Language] {
        match self {
            Self::PointerIntroduction => &[Language::C],
            _ => &[Language::Java],
        }
    }

    pub fn supports(self, language: Language) -> bool {
        self.supported_languages().contains(&language)
    }

    pub fn is_renaming(self) -> bool {
        matches!(
            self,
            Self::DeterministicIdentifierRenaming
                | Self::IdentifierCasingVariation
                | Self::MinimalCasingPerturbation
                | Self::CanonicalIdentifierSubstitution
        )
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("unknown perturbation kind: {0}")]
pub struct UnknownKind(pub String);

impl FromStr for PerturbationKind {
    type Err = UnknownKind;

    /// Accepts the variant name in any case, with or without `-`/`_`
    /// separators (`no-op-statement-injection`, `NoOpStatementInjection`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squash = |x: &str| {
            x.chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .collect::<String>()
                .to_ascii_lowercase()
        };
        let wanted = squash(s);
        Self::ALL
            .into_iter()
            .find(|k| squash(k.name()) == wanted)
            .ok_or_else(|| UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("{kind} does not support {language} (snippet {snippet_id})")]
    Unsupported {
        kind: PerturbationKind,
        language: Language,
        snippet_id: String,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{kind} produced unparsable output for {snippet_id}: error spans {spans:?}")]
    InvalidOutput {
        kind: PerturbationKind,
        snippet_id: String,
        spans: Vec<(usize, usize)>,
    },
    #[error("{kind} failed on {snippet_id}: {message}")]
    Internal {
        kind: PerturbationKind,
        snippet_id: String,
        message: String,
    },
    #[error(transparent)]
    Validation(#[from] ValidationFailure),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed correspondence file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbOptions {
    pub seed: u64,
    /// Probability that a statement boundary receives a `;` under
    /// [`PerturbationKind::NoOpStatementInjection`].
    pub noop_density: f64,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            noop_density: DEFAULT_NOOP_DENSITY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Perturbed {
    pub snippet: Snippet,
    pub map: CorrespondenceMap,
}

impl Perturbed {
    pub fn inapplicable(&self) -> bool {
        self.map.inapplicable
    }
}

/// Inputs handed to every transform.
pub(crate) struct Context<'a> {
    pub tree: &'a Tree,
    pub source: &'a str,
    pub rng: ChaCha8Rng,
    pub options: PerturbOptions,
}

pub fn apply_perturbation(
    snippet: &Snippet,
    kind: PerturbationKind,
    seed: u64,
) -> Result<Perturbed, PerturbError> {
    apply_perturbation_with(
        snippet,
        kind,
        &PerturbOptions {
            seed,
            ..PerturbOptions::default()
        },
    )
}

pub fn apply_perturbation_with(
    snippet: &Snippet,
    kind: PerturbationKind,
    options: &PerturbOptions,
) -> Result<Perturbed, PerturbError> {
    if !kind.supports(snippet.language) {
        return Err(PerturbError::Unsupported {
            kind,
            language: snippet.language,
            snippet_id: snippet.id.clone(),
        });
    }
    let tree = parse(snippet.language, &snippet.id, &snippet.source)?;
    let original_tokens = tokenize(snippet)?;
    let internal = |message: String| PerturbError::Internal {
        kind,
        snippet_id: snippet.id.clone(),
        message,
    };
    let mut cx = Context {
        tree: &tree,
        source: &snippet.source,
        rng: ChaCha8Rng::seed_from_u64(snippet_seed(options.seed, &snippet.id)),
        options: *options,
    };
    let rewrite = match kind {
        PerturbationKind::DeterministicIdentifierRenaming
        | PerturbationKind::IdentifierCasingVariation
        | PerturbationKind::MinimalCasingPerturbation
        | PerturbationKind::CanonicalIdentifierSubstitution => rename::rewrite(&mut cx, kind),
        PerturbationKind::VariableScopeReassignment => statements::hoist_declarations(&cx),
        PerturbationKind::InstrumentationInsertion => statements::instrument(&cx),
        PerturbationKind::BooleanExpressionNegation => statements::negate_conditions(&cx),
        PerturbationKind::NoOpStatementInjection => statements::inject_noops(&mut cx),
        PerturbationKind::StatementOrderRandomization => statements::reorder(&mut cx),
        PerturbationKind::PointerIntroduction => pointer::introduce(&cx),
        PerturbationKind::SwitchToConditional => switch::convert(&cx),
    }
    .filter(|rw| !rw.is_empty());
    let Some(rewrite) = rewrite else {
        return Ok(Perturbed {
            snippet: snippet.clone(),
            map: CorrespondenceMap::identity(&snippet.id, kind, original_tokens.len()),
        });
    };
    let pieces = rewrite
        .into_pieces(snippet.source.len())
        .map_err(internal)?;
    let rendered = edit::render(&snippet.source, pieces);
    let perturbed = Snippet::new(snippet.id.clone(), snippet.language, rendered.text.clone());
    let perturbed_tokens = match tokenize(&perturbed) {
        Ok(t) => t,
        Err(CorpusError::Parse { spans, .. }) => {
            return Err(PerturbError::InvalidOutput {
                kind,
                snippet_id: snippet.id.clone(),
                spans,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let origins = edit::correspond(&rendered, &original_tokens, &perturbed_tokens);
    let mut pairs = Vec::new();
    let mut unmatched_perturbed = Vec::new();
    let mut matched = vec![false; original_tokens.len()];
    for (p, o) in origins.into_iter().enumerate() {
        match o {
            Some(o) => {
                matched[o] = true;
                pairs.push((o, p));
            }
            None => unmatched_perturbed.push(p),
        }
    }
    pairs.sort_unstable();
    let unmatched_original = (0..original_tokens.len()).filter(|&i| !matched[i]).collect();
    let map = CorrespondenceMap {
        original_snippet_id: snippet.id.clone(),
        perturbed_snippet_id: perturbed.id.clone(),
        kind,
        inapplicable: false,
        pairs,
        unmatched_original,
        unmatched_perturbed,
    };
    map.check(original_tokens.len(), perturbed_tokens.len())
        .map_err(internal)?;
    Ok(Perturbed {
        snippet: perturbed,
        map,
    })
}

/// Per-snippet seed: stable across runs, platforms and thread counts.
fn snippet_seed(seed: u64, snippet_id: &str) -> u64 {
    // FNV-1a over the id, folded with the run seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in snippet_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Result of perturbing a whole corpus.
#[derive(Debug, Clone)]
pub struct CorpusPerturbation {
    pub corpus: Corpus,
    pub maps: Vec<CorrespondenceMap>,
    /// Snippets whose language the kind does not support; they are carried
    /// over unchanged with an identity map.
    pub unsupported: Vec<String>,
}

impl CorpusPerturbation {
    pub fn inapplicable(&self) -> Vec<&str> {
        self.maps
            .iter()
            .filter(|m| m.inapplicable)
            .map(|m| m.original_snippet_id.as_str())
            .collect()
    }
}

pub fn perturb_corpus(
    corpus: &Corpus,
    kind: PerturbationKind,
    options: &PerturbOptions,
) -> Result<CorpusPerturbation, PerturbError> {
    let snippets: Vec<&Snippet> = corpus.iter().collect();
    let results: Vec<(Perturbed, bool)> = snippets
        .par_iter()
        .map(|s| {
            if kind.supports(s.language) {
                apply_perturbation_with(s, kind, options).map(|p| (p, true))
            } else {
                let n = tokenize(s)?.len();
                Ok((
                    Perturbed {
                        snippet: (*s).clone(),
                        map: CorrespondenceMap::identity(&s.id, kind, n),
                    },
                    false,
                ))
            }
        })
        .collect::<Result<_, PerturbError>>()?;
    let unsupported = results
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(p, _)| p.snippet.id.clone())
        .collect();
    let (perturbed, maps): (Vec<Snippet>, Vec<CorrespondenceMap>) =
        results.into_iter().map(|(p, _)| (p.snippet, p.map)).unzip();
    Ok(CorpusPerturbation {
        corpus: Corpus::from_snippets(perturbed)?,
        maps,
        unsupported,
    })
}
