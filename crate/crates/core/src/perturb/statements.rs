//! Statement-level Java transforms: declaration hoisting, instrumentation,
//! condition double negation, empty-statement injection and reordering of
//! independent neighbours.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use tree_sitter::Node;

use super::edit::{Piece, Rewrite};
use super::syntax::{children, contains_kind, descendants, field_of, has_ancestor, range, statements, text};
use super::Context;

/// Statement text appended by the instrumentation transform.
pub(crate) const PROBE: &str = "System.err.print(\"\");";

fn bodies<'t>(root: Node<'t>) -> Vec<Node<'t>> {
    descendants(root)
        .into_iter()
        .filter(|n| matches!(n.kind(), "method_declaration" | "constructor_declaration"))
        .filter_map(|n| n.child_by_field_name("body"))
        .collect()
}

fn blocks<'t>(root: Node<'t>) -> Vec<Node<'t>> {
    descendants(root)
        .into_iter()
        .filter(|n| matches!(n.kind(), "block" | "constructor_body"))
        .collect()
}

/// True when a condition could be a compile-time constant, which would make
/// the reachability of what follows the loop differ.
fn maybe_constant(cond: Node) -> bool {
    !contains_kind(cond, &["identifier", "method_invocation", "field_access"])
}

/// Conservative: `false` whenever normal completion is not obvious.
pub(crate) fn may_complete_normally(n: Node) -> bool {
    match n.kind() {
        "expression_statement" | "local_variable_declaration" | "class_declaration"
        | "explicit_constructor_invocation" | "assert_statement" | "enhanced_for_statement"
        | ";" => true,
        "block" => statements(n).last().is_none_or(|s| may_complete_normally(*s)),
        "if_statement" => match (n.child_by_field_name("consequence"), n.child_by_field_name("alternative")) {
            (_, None) => true,
            (Some(c), Some(a)) => may_complete_normally(c) || may_complete_normally(a),
            _ => false,
        },
        "while_statement" => n.child_by_field_name("condition").is_some_and(|c| !maybe_constant(c)),
        "for_statement" => n.child_by_field_name("condition").is_some_and(|c| !maybe_constant(c)),
        _ => false,
    }
}

pub(crate) fn instrument(cx: &Context) -> Option<Rewrite> {
    let mut rw = Rewrite::new();
    for body in bodies(cx.tree.root_node()) {
        for stmt in statements(body) {
            if may_complete_normally(stmt) {
                rw.insert(stmt.end_byte(), format!(" {PROBE}"));
            }
        }
    }
    Some(rw)
}

pub(crate) fn negate_conditions(cx: &Context) -> Option<Rewrite> {
    let mut rw = Rewrite::new();
    for n in descendants(cx.tree.root_node()) {
        if !matches!(n.kind(), "if_statement" | "while_statement" | "do_statement") {
            continue;
        }
        let Some(cond) = n.child_by_field_name("condition") else {
            continue;
        };
        let mut cursor = cond.walk();
        let inner: Vec<Node> = cond
            .named_children(&mut cursor)
            .filter(|c| !c.kind().ends_with("comment"))
            .collect();
        if let [expr] = inner[..] {
            rw.insert(expr.start_byte(), "!!(");
            rw.insert(expr.end_byte(), ")");
        }
    }
    Some(rw)
}

/// Positions right before a statement where an empty statement is legal.
fn statement_boundaries(root: Node) -> Vec<usize> {
    let mut out = Vec::new();
    for block in blocks(root) {
        for (i, stmt) in statements(block).into_iter().enumerate() {
            if i == 0 && stmt.kind() == "explicit_constructor_invocation" {
                continue;
            }
            out.push(stmt.start_byte());
        }
    }
    out.sort_unstable();
    out
}

pub(crate) fn inject_noops(cx: &mut Context) -> Option<Rewrite> {
    let boundaries = statement_boundaries(cx.tree.root_node());
    if boundaries.is_empty() {
        return None;
    }
    let density = cx.options.noop_density.clamp(0.0, 1.0);
    let mut chosen: Vec<usize> = boundaries
        .iter()
        .copied()
        .filter(|_| cx.rng.gen_bool(density))
        .collect();
    if chosen.is_empty() {
        chosen.push(*boundaries.choose(&mut cx.rng)?);
    }
    let mut rw = Rewrite::new();
    for at in chosen {
        rw.insert(at, "; ");
    }
    Some(rw)
}

/// Identifiers a statement may read and may write.
#[derive(Debug, Default)]
pub(crate) struct Effects {
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
}

const IMPURE_KINDS: &[&str] = &[
    "method_invocation",
    "object_creation_expression",
    "array_creation_expression",
    "lambda_expression",
    "method_reference",
    "array_access",
    "field_access",
    "cast_expression",
    "switch_expression",
    "this",
    "super",
    "class_literal",
    "class_body",
    "instanceof_expression",
];

/// Read/write sets of a statement that may be reordered, or `None` if the
/// statement is not a plain declaration or expression without side
/// channels (calls, allocation, array or field access, division).
pub(crate) fn effects(stmt: Node, source: &str) -> Option<Effects> {
    if !matches!(stmt.kind(), "local_variable_declaration" | "expression_statement") {
        return None;
    }
    let nodes = descendants(stmt);
    let mut fx = Effects::default();
    for n in &nodes {
        if IMPURE_KINDS.contains(&n.kind()) {
            return None;
        }
        if matches!(n.kind(), "binary_expression" | "assignment_expression") {
            let op = n.child_by_field_name("operator").map(|o| text(o, source));
            if matches!(op, Some("/" | "%" | "/=" | "%=")) {
                return None;
            }
        }
        if n.kind() != "identifier" {
            continue;
        }
        let name = text(*n, source).to_owned();
        let parent = n.parent().map(|p| p.kind());
        let written = matches!(
            (parent, field_of(*n)),
            (Some("variable_declarator"), Some("name"))
                | (Some("assignment_expression"), Some("left"))
                | (Some("update_expression"), _)
        );
        if written {
            fx.writes.insert(name);
        } else {
            fx.reads.insert(name);
        }
    }
    Some(fx)
}

pub(crate) fn independent(a: &Effects, b: &Effects) -> bool {
    let touches = |w: &BTreeSet<String>, fx: &Effects| {
        w.iter().any(|x| fx.reads.contains(x) || fx.writes.contains(x))
    };
    !touches(&a.writes, b) && !touches(&b.writes, a)
}

pub(crate) fn reorder(cx: &mut Context) -> Option<Rewrite> {
    let mut swaps = Vec::new();
    let mut candidates = Vec::new();
    for block in blocks(cx.tree.root_node()) {
        let stmts = statements(block);
        let fx: Vec<Option<Effects>> = stmts.iter().map(|s| effects(*s, cx.source)).collect();
        let mut i = 0;
        while i + 1 < stmts.len() {
            if let (Some(a), Some(b)) = (&fx[i], &fx[i + 1]) {
                if independent(a, b) {
                    candidates.push((stmts[i], stmts[i + 1]));
                    if cx.rng.gen_bool(0.5) {
                        swaps.push((stmts[i], stmts[i + 1]));
                        i += 2;
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
    if swaps.is_empty() {
        swaps.push(*candidates.choose(&mut cx.rng)?);
    }
    let mut rw = Rewrite::new();
    for (a, b) in swaps {
        rw.splice(
            a.start_byte()..b.end_byte(),
            vec![
                Piece::Copy(range(b)),
                Piece::Copy(a.end_byte()..b.start_byte()),
                Piece::Copy(range(a)),
            ],
        );
    }
    Some(rw)
}

const DECLARING_PARENTS: &[&str] = &[
    "variable_declarator",
    "formal_parameter",
    "catch_formal_parameter",
    "enhanced_for_statement",
    "resource",
    "inferred_parameters",
    "lambda_expression",
];

const NO_HOIST_ANCESTORS: &[&str] = &[
    "for_statement",
    "enhanced_for_statement",
    "while_statement",
    "do_statement",
    "lambda_expression",
    "class_body",
];

pub(crate) fn hoist_declarations(cx: &Context) -> Option<Rewrite> {
    let source = cx.source;
    let mut rw = Rewrite::new();
    for body in bodies(cx.tree.root_node()) {
        let Some(method) = body.parent() else {
            continue;
        };
        let all = descendants(method);
        let local_classes: BTreeSet<&str> = all
            .iter()
            .filter(|n| n.kind() == "class_declaration" && n.id() != method.id())
            .filter_map(|n| n.child_by_field_name("name"))
            .map(|n| text(n, source))
            .collect();
        let declared_count = |name: &str| {
            all.iter()
                .filter(|n| n.kind() == "identifier" && text(**n, source) == name)
                .filter(|n| {
                    n.parent().is_some_and(|p| DECLARING_PARENTS.contains(&p.kind()))
                        && matches!(field_of(**n), Some("name" | "parameters") | None)
                })
                .count()
        };
        let mut hoisted = Vec::new();
        for decl in all.iter().filter(|n| n.kind() == "local_variable_declaration") {
            let Some(block) = decl.parent().filter(|p| p.kind() == "block") else {
                continue;
            };
            if has_ancestor(*decl, body, NO_HOIST_ANCESTORS)
                || children(*decl).iter().any(|c| c.kind() == "modifiers")
            {
                continue;
            }
            let Some(ty) = decl.child_by_field_name("type") else {
                continue;
            };
            let ty_text = text(ty, source);
            if ty_text == "var"
                || descendants(ty)
                    .iter()
                    .any(|t| local_classes.contains(text(*t, source)))
            {
                continue;
            }
            let mut cursor = decl.walk();
            let declarators: Vec<Node> = decl
                .children_by_field_name("declarator", &mut cursor)
                .collect();
            let ok = declarators.iter().all(|d| {
                let Some(name) = d.child_by_field_name("name") else {
                    return false;
                };
                let name = text(name, source);
                let value_ok = d
                    .child_by_field_name("value")
                    .is_none_or(|v| v.kind() != "array_initializer");
                let no_dims = d.child_by_field_name("dimensions").is_none();
                let scoped = all
                    .iter()
                    .filter(|n| n.kind() == "identifier" && text(**n, source) == name)
                    .all(|n| {
                        n.start_byte() >= decl.start_byte() && n.end_byte() <= block.end_byte()
                    });
                value_ok && no_dims && scoped && declared_count(name) == 1
            });
            if !ok || declarators.is_empty() {
                continue;
            }
            let heads: Vec<String> = declarators
                .iter()
                .map(|d| {
                    let end = d
                        .child_by_field_name("name")
                        .map_or(d.end_byte(), |n| n.end_byte());
                    source[d.start_byte()..end].to_owned()
                })
                .collect();
            hoisted.push(format!(" {ty_text} {};", heads.join(", ")));
            let mut pieces = Vec::new();
            for d in declarators.iter().filter(|d| d.child_by_field_name("value").is_some()) {
                if !pieces.is_empty() {
                    pieces.push(Piece::Insert(" ".into()));
                }
                pieces.push(Piece::Copy(range(*d)));
                pieces.push(Piece::Insert(";".into()));
            }
            rw.splice(range(*decl), pieces);
        }
        if hoisted.is_empty() {
            continue;
        }
        let first = statements(body).into_iter().next();
        let at = match first {
            Some(s) if s.kind() == "explicit_constructor_invocation" => s.end_byte(),
            _ => body.start_byte() + 1,
        };
        for h in hoisted {
            rw.insert(at, h);
        }
    }
    Some(rw)
}
