//! Surface-form patterns shared by the distinct token texts of a cluster.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Minimum witness length for the substring family ("longer than 3").
pub const MIN_SUBSTRING_LEN: usize = 4;
pub const DEFAULT_LEXICAL_THRESHOLD: f64 = 0.8;

static CAMEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[a-z]+([A-Z][a-z0-9]*)+$").unwrap());
static PASCAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Z][a-z0-9]+([A-Z][a-z0-9]*)+$").unwrap());

pub fn is_camel_case(s: &str) -> bool {
    CAMEL.is_match(s)
}

pub fn is_pascal_case(s: &str) -> bool {
    PASCAL.is_match(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LexicalPattern {
    Substring,
    Prefix,
    Suffix,
    Camel,
    Pascal,
}

impl LexicalPattern {
    pub const ALL: [LexicalPattern; 5] = [
        LexicalPattern::Substring,
        LexicalPattern::Prefix,
        LexicalPattern::Suffix,
        LexicalPattern::Camel,
        LexicalPattern::Pascal,
    ];

    pub fn title(self) -> &'static str {
        match self {
            LexicalPattern::Substring => "Substring match (>3)",
            LexicalPattern::Prefix => "Prefix",
            LexicalPattern::Suffix => "Suffix",
            LexicalPattern::Camel => "Camel Casing",
            LexicalPattern::Pascal => "Pascal Casing",
        }
    }
}

impl fmt::Display for LexicalPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub pattern: LexicalPattern,
    /// Longest qualifying affix or substring; `None` for casing patterns.
    pub witness: Option<String>,
    /// Fraction of distinct texts that satisfy the pattern.
    pub fraction: f64,
}

fn meets(count: usize, n: usize, threshold: f64) -> bool {
    count as f64 / n as f64 >= threshold
}

/// Patterns satisfied by at least `threshold` of the distinct texts.
pub fn detect_lexical_patterns<S: AsRef<str>>(texts: &[S], threshold: f64) -> Vec<PatternMatch> {
    let distinct: BTreeSet<&str> = texts.iter().map(AsRef::as_ref).collect();
    if distinct.is_empty() {
        return Vec::new();
    }
    let texts: Vec<Vec<char>> = distinct.iter().map(|t| t.chars().collect()).collect();
    let n = texts.len();

    // A string shared by `need` texts is no longer than the need-th longest text.
    let need = (0..=n).find(|&c| meets(c, n, threshold)).unwrap_or(n + 1);
    let mut out = Vec::new();
    if need > n {
        return out;
    }
    let mut lengths: Vec<usize> = texts.iter().map(Vec::len).collect();
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    let max_len = if need == 0 { lengths[0] } else { lengths[need - 1] };

    if let Some(m) = longest_affix(&texts, need, max_len, false) {
        out.push(m.into_match(LexicalPattern::Prefix, n));
    }
    if let Some(m) = longest_affix(&texts, need, max_len, true) {
        out.push(m.into_match(LexicalPattern::Suffix, n));
    }
    if let Some(m) = longest_substring(&texts, need, max_len) {
        out.push(m.into_match(LexicalPattern::Substring, n));
    }
    for (pattern, check) in [
        (LexicalPattern::Camel, is_camel_case as fn(&str) -> bool),
        (LexicalPattern::Pascal, is_pascal_case),
    ] {
        let count = distinct.iter().filter(|t| check(t)).count();
        if meets(count, n, threshold) {
            out.push(PatternMatch {
                pattern,
                witness: None,
                fraction: count as f64 / n as f64,
            });
        }
    }
    out.sort_by_key(|m| m.pattern);
    out
}

struct Witness {
    text: String,
    count: usize,
}

impl Witness {
    fn into_match(self, pattern: LexicalPattern, n: usize) -> PatternMatch {
        PatternMatch {
            pattern,
            fraction: self.count as f64 / n as f64,
            witness: Some(self.text),
        }
    }
}

/// Best candidate: most texts, then lexicographically smallest.
fn best<'a>(counts: impl IntoIterator<Item = (&'a [char], usize)>, need: usize) -> Option<Witness> {
    counts
        .into_iter()
        .filter(|&(_, c)| c >= need && need > 0)
        .map(|(s, c)| (s.iter().collect::<String>(), c))
        .min_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)))
        .map(|(text, count)| Witness { text, count })
}

fn longest_affix(texts: &[Vec<char>], need: usize, max_len: usize, suffix: bool) -> Option<Witness> {
    let mut counts: HashMap<&[char], usize> = HashMap::new();
    for t in texts {
        for len in 1..=t.len().min(max_len) {
            let piece = if suffix { &t[t.len() - len..] } else { &t[..len] };
            *counts.entry(piece).or_insert(0) += 1;
        }
    }
    let longest = counts
        .iter()
        .filter(|&(_, &c)| c >= need)
        .map(|(s, _)| s.len())
        .max()?;
    best(counts.into_iter().filter(|(s, _)| s.len() == longest), need)
}

/// Texts (distinct per text) containing each length-`len` substring.
fn substring_counts(texts: &[Vec<char>], len: usize) -> HashMap<&[char], usize> {
    let mut counts: HashMap<&[char], usize> = HashMap::new();
    let mut seen: HashSet<&[char]> = HashSet::new();
    for t in texts {
        if t.len() < len {
            continue;
        }
        seen.clear();
        for w in t.windows(len) {
            if seen.insert(w) {
                *counts.entry(w).or_insert(0) += 1;
            }
        }
    }
    counts
}

fn longest_substring(texts: &[Vec<char>], need: usize, max_len: usize) -> Option<Witness> {
    let qualifies = |len: usize| {
        substring_counts(texts, len)
            .values()
            .any(|&c| c >= need)
    };
    // shortening a qualifying substring keeps it qualifying, so bisect on length
    if need == 0 || max_len < MIN_SUBSTRING_LEN || !qualifies(MIN_SUBSTRING_LEN) {
        return None;
    }
    let (mut lo, mut hi) = (MIN_SUBSTRING_LEN, max_len);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if qualifies(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    best(substring_counts(texts, lo), need)
}
