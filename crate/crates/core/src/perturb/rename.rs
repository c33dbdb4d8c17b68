//! The four identifier-renaming transforms.
//!
//! A name is renamable when it is declared in the snippet (a variable of any
//! kind, or a `private`/`static` method other than `main`) and every token
//! carrying that text sits in a position we understand: a declaration, a
//! plain expression reference, `this.name`, or an unqualified call. Names
//! that also occur after a foreign qualifier (`obj.name`), as types, labels,
//! imports and the like are left alone entirely. Renaming is by text, so all
//! occurrences change together and the substitution is injective.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use regex::Regex;
use tree_sitter::Node;

use super::edit::Rewrite;
use super::syntax::{children, descendants, field_of, range, text, JAVA_KEYWORDS};
use super::{Context, PerturbationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    VarDecl,
    VarUse,
    MethodDecl { renamable: bool },
    MethodCall,
    Foreign,
}

const FOREIGN_PARENTS: &[&str] = &[
    "scoped_identifier",
    "scoped_type_identifier",
    "method_reference",
    "labeled_statement",
    "break_statement",
    "continue_statement",
    "marker_annotation",
    "annotation",
    "import_declaration",
    "package_declaration",
    "class_declaration",
    "interface_declaration",
    "enum_declaration",
    "record_declaration",
    "annotation_type_declaration",
    "enum_constant",
    "constructor_declaration",
    "element_value_pair",
    "switch_label",
    "module_declaration",
];

fn classify(node: Node, source: &str) -> Role {
    let Some(parent) = node.parent() else {
        return Role::Foreign;
    };
    let field = field_of(node);
    match (parent.kind(), field) {
        ("variable_declarator", Some("name"))
        | ("formal_parameter", Some("name"))
        | ("catch_formal_parameter", Some("name"))
        | ("enhanced_for_statement", Some("name"))
        | ("resource", Some("name"))
        | ("lambda_expression", Some("parameters"))
        | ("inferred_parameters", _) => Role::VarDecl,
        ("method_declaration", Some("name")) => {
            let modifiers = children(parent)
                .into_iter()
                .find(|c| c.kind() == "modifiers")
                .map(|m| text(m, source))
                .unwrap_or("");
            let private_or_static = modifiers
                .split(|c: char| !c.is_ascii_alphanumeric())
                .any(|w| w == "private" || w == "static");
            Role::MethodDecl {
                renamable: private_or_static && text(node, source) != "main",
            }
        }
        ("method_invocation", Some("name")) => match parent.child_by_field_name("object") {
            None => Role::MethodCall,
            Some(o) if o.kind() == "this" => Role::MethodCall,
            Some(_) => Role::Foreign,
        },
        ("field_access", Some("field")) => match parent.child_by_field_name("object") {
            Some(o) if o.kind() == "this" => Role::VarUse,
            _ => Role::Foreign,
        },
        (kind, _) if FOREIGN_PARENTS.contains(&kind) => Role::Foreign,
        _ => Role::VarUse,
    }
}

/// A renamable name with every occurrence and where it was first declared.
#[derive(Debug, Clone)]
pub(crate) struct Entity {
    pub name: String,
    pub occurrences: Vec<Range<usize>>,
    pub first_occurrence: usize,
    pub first_declaration: usize,
    pub is_method: bool,
}

/// Renamable names plus every identifier-like text that must not be reused.
pub(crate) struct Analysis {
    pub entities: Vec<Entity>,
    pub reserved: BTreeSet<String>,
}

pub(crate) fn analyze(cx: &Context) -> Analysis {
    let source = cx.source;
    let mut roles: BTreeMap<&str, Vec<(Role, Range<usize>)>> = BTreeMap::new();
    for n in descendants(cx.tree.root_node()) {
        if n.kind() == "identifier" {
            roles
                .entry(text(n, source))
                .or_default()
                .push((classify(n, source), range(n)));
        }
    }
    // Token counts per text catch uses as types, in comments' neighbours, etc.
    let mut token_counts: BTreeMap<&str, usize> = BTreeMap::new();
    crate::corpus::tokenize::for_each_token(cx.tree, source, |n| {
        *token_counts.entry(text(n, source)).or_default() += 1;
    });
    let mut reserved: BTreeSet<String> = JAVA_KEYWORDS.iter().map(|s| s.to_string()).collect();
    let mut entities = Vec::new();
    for (name, occ) in &roles {
        let has = |f: &dyn Fn(Role) -> bool| occ.iter().any(|(r, _)| f(*r));
        let var_decl = has(&|r| r == Role::VarDecl);
        let good_method = has(&|r| r == Role::MethodDecl { renamable: true });
        let bad_method = has(&|r| r == Role::MethodDecl { renamable: false });
        let foreign = has(&|r| r == Role::Foreign);
        let called = has(&|r| r == Role::MethodCall);
        let renamable = (var_decl || good_method)
            && !foreign
            && !bad_method
            && (!called || good_method)
            && token_counts.get(name).copied() == Some(occ.len());
        if !renamable {
            continue;
        }
        let first_declaration = occ
            .iter()
            .filter(|(r, _)| matches!(r, Role::VarDecl | Role::MethodDecl { .. }))
            .map(|(_, r)| r.start)
            .min()
            .unwrap_or(usize::MAX);
        let first_decl_is_method = occ
            .iter()
            .any(|(r, s)| s.start == first_declaration && matches!(r, Role::MethodDecl { .. }));
        entities.push(Entity {
            name: name.to_string(),
            occurrences: occ.iter().map(|(_, r)| r.clone()).collect(),
            first_occurrence: occ.iter().map(|(_, r)| r.start).min().unwrap_or(0),
            first_declaration,
            is_method: first_decl_is_method,
        });
    }
    let renamed: BTreeSet<&str> = entities.iter().map(|e| e.name.as_str()).collect();
    for t in token_counts.keys() {
        if !renamed.contains(t) {
            reserved.insert(t.to_string());
        }
    }
    entities.sort_by_key(|e| e.first_occurrence);
    Analysis { entities, reserved }
}

static SNAKE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[a-z][a-z0-9]*(_[a-z0-9]+)+$").expect("valid regex"));
static CAMEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[a-z][a-z0-9]*([A-Z][a-z0-9]*)+$").expect("valid regex"));

pub(crate) fn snake_to_camel(name: &str) -> String {
    let mut parts = name.split('_');
    let mut out = parts.next().unwrap_or("").to_owned();
    for p in parts {
        let mut cs = p.chars();
        if let Some(c) = cs.next() {
            out.push(c.to_ascii_uppercase());
            out.extend(cs);
        }
    }
    out
}

pub(crate) fn camel_to_snake(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    for c in name.chars() {
        if c.is_ascii_uppercase() {
            out.push('_');
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// Flips the casing style of `name`, or `None` when it is neither
/// snake_case nor camelCase.
pub(crate) fn toggle_casing(name: &str) -> Option<String> {
    if SNAKE.is_match(name) {
        Some(snake_to_camel(name))
    } else if CAMEL.is_match(name) {
        Some(camel_to_snake(name))
    } else {
        None
    }
}

fn numbered(prefix: &str, counter: &mut usize, taken: &BTreeSet<String>, used: &BTreeSet<String>) -> String {
    loop {
        let candidate = format!("{prefix}{counter}");
        *counter += 1;
        if !taken.contains(&candidate) && !used.contains(&candidate) {
            return candidate;
        }
    }
}

/// New name for each renamed entity (entities missing from the map keep
/// their name).
fn plan(cx: &mut Context, analysis: &Analysis, kind: PerturbationKind) -> BTreeMap<String, String> {
    let taken = &analysis.reserved;
    let mut used = BTreeSet::new();
    let mut plan = BTreeMap::new();
    match kind {
        PerturbationKind::DeterministicIdentifierRenaming => {
            let mut n = 0;
            for e in &analysis.entities {
                let new = numbered("v", &mut n, taken, &used);
                used.insert(new.clone());
                plan.insert(e.name.clone(), new);
            }
        }
        PerturbationKind::CanonicalIdentifierSubstitution => {
            let mut by_decl: Vec<&Entity> = analysis.entities.iter().collect();
            by_decl.sort_by_key(|e| e.first_declaration);
            let (mut vars, mut fns) = (1, 1);
            for e in by_decl {
                let new = if e.is_method {
                    numbered("fn", &mut fns, taken, &used)
                } else {
                    numbered("var", &mut vars, taken, &used)
                };
                used.insert(new.clone());
                plan.insert(e.name.clone(), new);
            }
        }
        PerturbationKind::IdentifierCasingVariation => {
            let names: BTreeSet<&str> = analysis.entities.iter().map(|e| e.name.as_str()).collect();
            for e in &analysis.entities {
                let Some(new) = toggle_casing(&e.name) else {
                    continue;
                };
                // Must not collide with anything that keeps or takes a name.
                if taken.contains(&new) || used.contains(&new) || names.contains(new.as_str()) {
                    continue;
                }
                used.insert(new.clone());
                plan.insert(e.name.clone(), new);
            }
        }
        PerturbationKind::MinimalCasingPerturbation => {
            let names: BTreeSet<&str> = analysis.entities.iter().map(|e| e.name.as_str()).collect();
            let mut candidates = Vec::new();
            for e in &analysis.entities {
                for (i, c) in e.name.char_indices() {
                    if !c.is_ascii_alphabetic() {
                        continue;
                    }
                    let flipped = if c.is_ascii_lowercase() {
                        c.to_ascii_uppercase()
                    } else {
                        c.to_ascii_lowercase()
                    };
                    let mut new = e.name.clone();
                    new.replace_range(i..i + 1, &flipped.to_string());
                    if !taken.contains(&new) && !names.contains(new.as_str()) {
                        candidates.push((e.name.clone(), new));
                    }
                }
            }
            if let Some((old, new)) = candidates.choose(&mut cx.rng) {
                plan.insert(old.clone(), new.clone());
            }
        }
        _ => unreachable!("not a renaming kind"),
    }
    plan.retain(|old, new| old != new);
    plan
}

pub(crate) fn rewrite(cx: &mut Context, kind: PerturbationKind) -> Option<Rewrite> {
    let analysis = analyze(cx);
    let plan = plan(cx, &analysis, kind);
    let mut rw = Rewrite::new();
    for e in &analysis.entities {
        if let Some(new) = plan.get(&e.name) {
            for r in &e.occurrences {
                rw.replace_token(r.clone(), new.clone());
            }
        }
    }
    Some(rw)
}
