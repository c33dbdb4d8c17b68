//! Independent checks that a perturbed snippet means the same as its
//! original. These look only at the two sources, never at the rewrite that
//! produced them, so a transform bug shows up as a failure here.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;
use tree_sitter::Node;

use super::rename::toggle_casing;
use super::statements::{effects, independent, PROBE};
use super::syntax::{descendants, is_identifier, statements, text, C_KEYWORDS, JAVA_KEYWORDS};
use super::PerturbationKind;
use crate::corpus::{parse, tokenize, Language, Snippet, TokenInstance};

/// A failed semantic-preservation check with every problem found.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValidationFailure {
    pub snippet_id: String,
    pub kind: PerturbationKind,
    pub problems: Vec<String>,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} broke semantics of {}: {}",
            self.kind,
            self.snippet_id,
            self.problems.join("; ")
        )
    }
}

fn texts(tokens: &[TokenInstance]) -> Vec<&str> {
    tokens.iter().map(|t| t.text.as_str()).collect()
}

fn is_name(s: &str, language: Language) -> bool {
    let keywords = match language {
        Language::C => C_KEYWORDS,
        _ => JAVA_KEYWORDS,
    };
    is_identifier(s) && !keywords.contains(&s)
}

pub fn validate_semantics_preserved(
    original: &Snippet,
    perturbed: &Snippet,
    kind: PerturbationKind,
) -> Result<(), ValidationFailure> {
    let fail = |problems: Vec<String>| ValidationFailure {
        snippet_id: original.id.clone(),
        kind,
        problems,
    };
    let (o, p) = match (tokenize(original), tokenize(perturbed)) {
        (Ok(o), Ok(p)) => (o, p),
        (Err(e), _) => return Err(fail(vec![format!("original does not parse: {e}")])),
        (_, Err(e)) => return Err(fail(vec![format!("perturbed does not parse: {e}")])),
    };
    let (ot, pt) = (texts(&o), texts(&p));
    let problems = match kind {
        k if k.is_renaming() => check_renaming(&ot, &pt, k, original.language),
        PerturbationKind::NoOpStatementInjection => check_insertion(&ot, &pt, &[";"], true),
        PerturbationKind::InstrumentationInsertion => {
            let probe = Snippet::new("probe", Language::Java, format!("class P {{ void f() {{ {PROBE} }} }}"));
            let probe_tokens = tokenize(&probe).expect("probe statement parses");
            let body: Vec<&str> = texts(&probe_tokens)[8..probe_tokens.len() - 2].to_vec();
            check_insertion(&ot, &pt, &body, false)
        }
        PerturbationKind::BooleanExpressionNegation => check_negation(&ot, &pt),
        PerturbationKind::PointerIntroduction => check_pointer(&ot, &pt),
        PerturbationKind::StatementOrderRandomization => check_reorder(original, perturbed),
        PerturbationKind::VariableScopeReassignment => check_hoisting(original, perturbed),
        PerturbationKind::SwitchToConditional => check_switch(&ot, &pt, original.language),
        _ => unreachable!("renaming kinds handled above"),
    };
    if problems.is_empty() {
        Ok(())
    } else {
        Err(fail(problems))
    }
}

fn check_renaming(o: &[&str], p: &[&str], kind: PerturbationKind, lang: Language) -> Vec<String> {
    if o.len() != p.len() {
        return vec![format!("token count changed from {} to {}", o.len(), p.len())];
    }
    let mut problems = Vec::new();
    let mut forward: BTreeMap<&str, &str> = BTreeMap::new();
    let mut backward: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, (a, b)) in o.iter().zip(p).enumerate() {
        if a == b && !is_name(a, lang) {
            continue;
        }
        if !is_name(a, lang) || !is_name(b, lang) {
            problems.push(format!("token {i} changed from {a:?} to {b:?}"));
            continue;
        }
        if let Some(prev) = forward.insert(a, b) {
            if prev != *b {
                problems.push(format!("identifier {a:?} renamed inconsistently ({prev:?} and {b:?})"));
            }
        }
        if let Some(prev) = backward.insert(b, a) {
            if prev != *a {
                problems.push(format!("identifiers {prev:?} and {a:?} both became {b:?}"));
            }
        }
    }
    problems.sort();
    problems.dedup();
    let changed: Vec<(&str, &str)> = forward.into_iter().filter(|(a, b)| a != b).collect();
    let numbered = |name: &str, prefixes: &[&str]| {
        prefixes.iter().any(|pre| {
            name.strip_prefix(pre)
                .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()))
        })
    };
    for (a, b) in &changed {
        let ok = match kind {
            PerturbationKind::DeterministicIdentifierRenaming => numbered(b, &["v"]),
            PerturbationKind::CanonicalIdentifierSubstitution => numbered(b, &["var", "fn"]),
            PerturbationKind::IdentifierCasingVariation => toggle_casing(a).as_deref() == Some(*b),
            PerturbationKind::MinimalCasingPerturbation => {
                a.len() == b.len()
                    && a.chars().zip(b.chars()).filter(|(x, y)| x != y).count() == 1
                    && a.eq_ignore_ascii_case(b)
            }
            _ => true,
        };
        if !ok {
            problems.push(format!("{a:?} -> {b:?} is not a {} rename", kind.title()));
        }
    }
    if kind == PerturbationKind::MinimalCasingPerturbation && changed.len() > 1 {
        problems.push(format!("{} identifiers changed case, expected one", changed.len()));
    }
    problems
}

/// Leftmost greedy embedding of `needle` in `hay`; `None` if it is not a
/// subsequence.
fn embed(needle: &[&str], hay: &[&str]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(needle.len());
    let mut j = 0;
    for n in needle {
        while j < hay.len() && hay[j] != *n {
            j += 1;
        }
        if j == hay.len() {
            return None;
        }
        out.push(j);
        j += 1;
    }
    Some(out)
}

fn multiset<'a>(xs: impl IntoIterator<Item = &'a str>) -> BTreeMap<&'a str, i64> {
    let mut m = BTreeMap::new();
    for x in xs {
        *m.entry(x).or_insert(0) += 1;
    }
    m
}

/// Original must embed in the perturbed stream and the surplus must be whole
/// copies of `unit`.
fn check_insertion(o: &[&str], p: &[&str], unit: &[&str], single: bool) -> Vec<String> {
    if embed(o, p).is_none() {
        return vec!["original token stream is not a subsequence of the perturbed one".into()];
    }
    let mut surplus = multiset(p.iter().copied());
    for t in o {
        *surplus.get_mut(t).expect("embedded tokens exist") -= 1;
    }
    surplus.retain(|_, c| *c != 0);
    let unit_counts = multiset(unit.iter().copied());
    let copies = surplus.get(unit[0]).copied().unwrap_or(0);
    let expected: BTreeMap<&str, i64> = unit_counts.iter().map(|(k, c)| (*k, c * copies)).collect();
    let mut problems = Vec::new();
    if copies == 0 {
        problems.push("nothing was inserted".into());
    }
    if surplus != expected && !(single && surplus.keys().all(|k| unit.contains(k))) {
        problems.push(format!("inserted tokens {surplus:?} are not copies of {unit:?}"));
    }
    problems
}

/// Index of the `)` matching the `(` at `open`.
fn matching_paren(p: &[&str], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in p.iter().enumerate().skip(open) {
        match *t {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn check_negation(o: &[&str], p: &[&str]) -> Vec<String> {
    let mut drop = vec![false; p.len()];
    let mut wrapped = 0;
    for i in 2..p.len().saturating_sub(2) {
        if p[i..i + 3] == ["!", "!", "("] && p[i - 1] == "(" && matches!(p[i - 2], "if" | "while") && !drop[i] {
            if let Some(close) = matching_paren(p, i + 2) {
                drop[i] = true;
                drop[i + 1] = true;
                drop[i + 2] = true;
                drop[close] = true;
                wrapped += 1;
            }
        }
    }
    let stripped: Vec<&str> = p
        .iter()
        .zip(&drop)
        .filter(|(_, d)| !**d)
        .map(|(t, _)| *t)
        .collect();
    let mut problems = Vec::new();
    if stripped != o {
        problems.push("tokens outside the wrapped conditions differ".into());
    }
    let conditions = o
        .windows(2)
        .filter(|w| matches!(w[0], "if" | "while") && w[1] == "(")
        .count();
    if wrapped != conditions {
        problems.push(format!("{wrapped} of {conditions} conditions wrapped"));
    }
    problems
}

const C_TYPE_WORDS: &[&str] = &[
    "int", "long", "short", "char", "unsigned", "signed", "float", "double", "_Bool", "bool",
    "size_t",
];

fn check_pointer(o: &[&str], p: &[&str]) -> Vec<String> {
    // Alias declarations: `T... * alias = & x ;`
    let mut aliases: HashMap<&str, &str> = HashMap::new();
    let mut drop = vec![false; p.len()];
    let mut i = 0;
    while i + 6 <= p.len() {
        let w = &p[i..i + 6];
        if w[0] == "*" && w[2] == "=" && w[3] == "&" && w[5] == ";" && w[1].starts_with("p_") && i > 0 && C_TYPE_WORDS.contains(&p[i - 1]) {
            aliases.insert(w[1], w[4]);
            let mut k = i;
            while k > 0 && C_TYPE_WORDS.contains(&p[k - 1]) && !drop[k - 1] {
                k -= 1;
                drop[k] = true;
            }
            for d in &mut drop[i..i + 6] {
                *d = true;
            }
            i += 6;
        } else {
            i += 1;
        }
    }
    let mut restored = Vec::with_capacity(p.len());
    let mut i = 0;
    while i < p.len() {
        if drop[i] {
            i += 1;
            continue;
        }
        if i + 4 <= p.len() && p[i] == "(" && p[i + 1] == "*" && p[i + 3] == ")" {
            if let Some(x) = aliases.get(p[i + 2]) {
                restored.push(*x);
                i += 4;
                continue;
            }
        }
        restored.push(p[i]);
        i += 1;
    }
    let mut problems = Vec::new();
    if aliases.is_empty() {
        problems.push("no alias pointer declared".into());
    }
    if restored != o {
        problems.push("stream differs from the original after undoing alias reads".into());
    }
    problems
}

/// Statements of every block in document order, each keyed by its sorted
/// token texts so rewrites nested inside a statement do not change its key.
fn block_statements<'t>(tree: &'t tree_sitter::Tree, tokens: &[TokenInstance]) -> Vec<Vec<(Vec<String>, Node<'t>)>> {
    descendants(tree.root_node())
        .into_iter()
        .filter(|n| matches!(n.kind(), "block" | "constructor_body"))
        .map(|b| {
            statements(b)
                .into_iter()
                .map(|s| {
                    let mut key: Vec<String> = tokens
                        .iter()
                        .filter(|t| t.start_byte >= s.start_byte() && t.end_byte <= s.end_byte())
                        .map(|t| t.text.clone())
                        .collect();
                    key.sort();
                    (key, s)
                })
                .collect()
        })
        .collect()
}

fn check_reorder(original: &Snippet, perturbed: &Snippet) -> Vec<String> {
    let parsed = (
        parse(original.language, &original.id, &original.source),
        parse(perturbed.language, &perturbed.id, &perturbed.source),
        tokenize(original),
        tokenize(perturbed),
    );
    let (Ok(ot), Ok(pt), Ok(otok), Ok(ptok)) = parsed else {
        return vec!["unparsable input".into()];
    };
    let mut problems = Vec::new();
    if multiset(texts(&otok)) != multiset(texts(&ptok)) {
        problems.push("token multiset changed".into());
    }
    let ob = block_statements(&ot, &otok);
    let pb = block_statements(&pt, &ptok);
    if ob.len() != pb.len() {
        problems.push(format!("block count changed from {} to {}", ob.len(), pb.len()));
        return problems;
    }
    let mut moved = 0;
    for (bi, (a, b)) in ob.iter().zip(&pb).enumerate() {
        // Position in `b` of each statement of `a`, equal keys matched in order.
        let mut used = vec![false; b.len()];
        let mut pos = Vec::with_capacity(a.len());
        for (key, _) in a {
            match b.iter().enumerate().position(|(j, (k, _))| !used[j] && k == key) {
                Some(j) => {
                    used[j] = true;
                    pos.push(j);
                }
                None => {
                    problems.push(format!("block {bi}: statement set changed"));
                    break;
                }
            }
        }
        if pos.len() != a.len() || a.len() != b.len() {
            continue;
        }
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                if pos[i] < pos[j] {
                    continue;
                }
                moved += 1;
                let fi = effects(a[i].1, &original.source);
                let fj = effects(a[j].1, &original.source);
                let ok = matches!((&fi, &fj), (Some(x), Some(y)) if independent(x, y));
                if !ok {
                    problems.push(format!(
                        "block {bi}: dependent statements swapped: `{}` and `{}`",
                        text(a[i].1, &original.source),
                        text(a[j].1, &original.source)
                    ));
                }
            }
        }
    }
    if moved == 0 && problems.is_empty() {
        problems.push("no statements moved".into());
    }
    problems
}

/// Count of each declared `(method, type, name)`.
type Declarations = BTreeMap<(usize, String, String), usize>;

/// Token stream with every block-level local declaration reduced to its
/// initializing assignments, plus the declared `(method, type, name)`s.
fn normalized(snippet: &Snippet) -> Option<(Vec<String>, Declarations)> {
    let tree = parse(snippet.language, &snippet.id, &snippet.source).ok()?;
    let tokens = tokenize(snippet).ok()?;
    let src = &snippet.source;
    let nodes = descendants(tree.root_node());
    let methods: Vec<Node> = nodes
        .iter()
        .copied()
        .filter(|n| matches!(n.kind(), "method_declaration" | "constructor_declaration"))
        .collect();
    let decls: Vec<Node> = nodes
        .iter()
        .copied()
        .filter(|n| n.kind() == "local_variable_declaration" && n.parent().is_some_and(|p| p.kind() == "block"))
        .collect();
    let mut declared = BTreeMap::new();
    let mut valued: Vec<(usize, usize)> = Vec::new();
    for d in &decls {
        let method = methods
            .iter()
            .rposition(|m| m.start_byte() <= d.start_byte() && d.end_byte() <= m.end_byte())
            .unwrap_or(usize::MAX);
        let ty = d.child_by_field_name("type").map_or("", |t| text(t, src)).to_owned();
        let mut cursor = d.walk();
        for decl in d.children_by_field_name("declarator", &mut cursor) {
            let name = decl.child_by_field_name("name").map_or("", |n| text(n, src)).to_owned();
            *declared.entry((method, ty.clone(), name)).or_insert(0) += 1;
            if decl.child_by_field_name("value").is_some() {
                valued.push((decl.start_byte(), decl.end_byte()));
            }
        }
    }
    let mut stream = Vec::new();
    for t in &tokens {
        let inside = decls
            .iter()
            .any(|d| d.start_byte() <= t.start_byte && t.end_byte <= d.end_byte());
        if !inside {
            stream.push(t.text.clone());
            continue;
        }
        if let Some(&(_, end)) = valued.iter().find(|(s, e)| *s <= t.start_byte && t.end_byte <= *e) {
            stream.push(t.text.clone());
            if t.end_byte == end {
                stream.push(";".into());
            }
        }
    }
    Some((stream, declared))
}

fn check_hoisting(original: &Snippet, perturbed: &Snippet) -> Vec<String> {
    let (Some((os, od)), Some((ps, pd))) = (normalized(original), normalized(perturbed)) else {
        return vec!["unparsable input".into()];
    };
    let mut problems = Vec::new();
    if os != ps {
        problems.push("statements differ after separating declarations from initializers".into());
    }
    if od != pd {
        let missing: Vec<_> = od.keys().filter(|k| !pd.contains_key(*k)).collect();
        problems.push(format!("declared variables differ (missing {missing:?})"));
    }
    if multiset(texts(&tokenize(original).unwrap_or_default())) == multiset(texts(&tokenize(perturbed).unwrap_or_default()))
        && original.source == perturbed.source
    {
        problems.push("nothing was hoisted".into());
    }
    problems
}

const SWITCH_ONLY: &[&str] = &["switch", "case", "default", ":", "break", "{", "}", "(", ")", ";"];
const CHAIN_TOKENS: &[&str] = &["if", "else", "(", ")", "{", "}", "==", "||", ".", "equals", "this"];

fn check_switch(o: &[&str], p: &[&str], lang: Language) -> Vec<String> {
    let mut problems = Vec::new();
    let switches_before = o.iter().filter(|t| **t == "switch").count();
    let switches_after = p.iter().filter(|t| **t == "switch").count();
    if switches_after >= switches_before {
        problems.push("no switch was converted".into());
    }
    let kept: Vec<&str> = o.iter().copied().filter(|t| !SWITCH_ONLY.contains(t)).collect();
    if embed(&kept, p).is_none() {
        problems.push("statements and labels of the switch are not preserved in order".into());
    }
    let mut surplus = multiset(p.iter().copied());
    for t in &kept {
        if let Some(c) = surplus.get_mut(t) {
            *c -= 1;
        }
    }
    let originals = multiset(o.iter().copied());
    for (t, c) in surplus {
        let allowed = CHAIN_TOKENS.contains(&t) || SWITCH_ONLY.contains(&t) || (is_name(t, lang) && originals.contains_key(t));
        if c > 0 && !allowed {
            problems.push(format!("unexpected inserted token {t:?}"));
        }
    }
    problems
}
