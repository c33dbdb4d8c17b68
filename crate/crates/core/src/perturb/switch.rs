//! Switch statements rewritten as if/else-if chains.
//!
//! Only classic `case ...:` switches qualify, and only when every group
//! other than the last ends in an unlabeled `break` or a `return`, the
//! subject is a side-effect-free variable or field read, all labels are
//! literals and `default`, if present, comes last. Anything else is left
//! untouched.

use std::collections::BTreeSet;

use tree_sitter::Node;

use super::edit::{Piece, Rewrite};
use super::syntax::{children, descendants, range, statements, text};
use super::Context;

#[derive(Debug)]
struct Group<'t> {
    labels: Vec<Node<'t>>,
    is_default: bool,
    body: Vec<Node<'t>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Comparison {
    Equality,
    Equals,
}

const LOOPS_AND_SWITCHES: &[&str] = &[
    "for_statement",
    "enhanced_for_statement",
    "while_statement",
    "do_statement",
    "switch_expression",
];

fn is_plain_subject(node: Node) -> bool {
    descendants(node)
        .iter()
        .all(|n| matches!(n.kind(), "identifier" | "field_access" | "this" | "."))
}

fn label_comparison(label: Node, source: &str) -> Option<Comparison> {
    match label.kind() {
        "decimal_integer_literal" | "hex_integer_literal" | "octal_integer_literal"
        | "binary_integer_literal" | "character_literal" => Some(Comparison::Equality),
        "string_literal" => Some(Comparison::Equals),
        "unary_expression" => {
            let op = label.child_by_field_name("operator").map(|o| text(o, source));
            let operand = label.child_by_field_name("operand")?;
            (op == Some("-") && operand.kind() == "decimal_integer_literal")
                .then_some(Comparison::Equality)
        }
        _ => None,
    }
}

fn is_unlabeled_break(n: Node) -> bool {
    n.kind() == "break_statement" && !children(n).iter().any(|c| c.kind() == "identifier")
}

/// True when `brk` targets a loop or switch nested inside `top` (inclusive).
fn breaks_inner(brk: Node, top: Node) -> bool {
    if brk.id() == top.id() {
        return false;
    }
    let mut cur = brk.parent();
    while let Some(n) = cur {
        if LOOPS_AND_SWITCHES.contains(&n.kind()) {
            return true;
        }
        if n.id() == top.id() {
            return false;
        }
        cur = n.parent();
    }
    false
}

/// Splits the switch block into groups, merging label-only groups into the
/// group that follows them.
fn groups(block: Node) -> Option<Vec<Group>> {
    let mut out: Vec<Group> = Vec::new();
    let mut pending: Vec<Node> = Vec::new();
    let mut pending_default = false;
    for g in children(block) {
        match g.kind() {
            "{" | "}" => continue,
            k if k.ends_with("comment") => continue,
            "switch_block_statement_group" => {}
            _ => return None,
        }
        let mut body = Vec::new();
        for c in statements(g) {
            if c.kind() == "switch_label" {
                match c.named_child(0) {
                    Some(l) if c.named_child_count() == 1 => pending.push(l),
                    None => pending_default = true,
                    Some(_) => return None,
                }
            } else {
                body.push(c);
            }
        }
        if !body.is_empty() {
            out.push(Group {
                labels: std::mem::take(&mut pending),
                is_default: std::mem::take(&mut pending_default),
                body,
            });
        }
    }
    if !pending.is_empty() || pending_default {
        // Trailing labels with no statements.
        out.push(Group {
            labels: pending,
            is_default: pending_default,
            body: Vec::new(),
        });
    }
    Some(out)
}

/// Statements to keep for a group, or `None` if the group is not
/// convertible.
fn group_body<'t>(group: &Group<'t>, last: bool) -> Option<Vec<Node<'t>>> {
    let mut body = group.body.clone();
    match body.last() {
        Some(s) if is_unlabeled_break(*s) => {
            body.pop();
        }
        Some(s) if s.kind() == "return_statement" => {}
        _ if last => {}
        _ => return None,
    }
    let stray_break = body.iter().any(|s| {
        descendants(*s)
            .into_iter()
            .any(|n| is_unlabeled_break(n) && !breaks_inner(n, *s))
    });
    (!stray_break).then_some(body)
}

fn declared_names<'s>(stmts: &[Node], source: &'s str) -> BTreeSet<&'s str> {
    stmts
        .iter()
        .filter(|s| s.kind() == "local_variable_declaration")
        .flat_map(|s| {
            let mut cursor = s.walk();
            s.children_by_field_name("declarator", &mut cursor)
                .filter_map(|d| d.child_by_field_name("name"))
                .map(|n| text(n, source))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn convert_one(switch: Node, source: &str) -> Option<Vec<Piece>> {
    if switch.parent()?.kind() != "block" {
        return None;
    }
    let cond = switch.child_by_field_name("condition")?;
    let subject = cond.named_child(0).filter(|_| cond.named_child_count() == 1)?;
    if !is_plain_subject(subject) {
        return None;
    }
    let groups = groups(switch.child_by_field_name("body")?)?;
    if groups.is_empty() || groups.iter().all(|g| g.labels.is_empty()) {
        return None;
    }
    if groups.iter().rev().skip(1).any(|g| g.is_default) {
        return None;
    }
    let mut comparison = None;
    for l in groups.iter().flat_map(|g| &g.labels) {
        let c = label_comparison(*l, source)?;
        if comparison.is_some_and(|prev| prev != c) {
            return None;
        }
        comparison = Some(c);
    }
    let comparison = comparison?;
    let bodies: Vec<Vec<Node>> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| group_body(g, i + 1 == groups.len()))
        .collect::<Option<_>>()?;
    // Declarations scoped to the whole switch block must stay in their group.
    for (i, b) in bodies.iter().enumerate() {
        for name in declared_names(b, source) {
            let elsewhere = bodies.iter().enumerate().any(|(j, other)| {
                j != i
                    && other.iter().any(|s| {
                        descendants(*s)
                            .iter()
                            .any(|n| n.kind() == "identifier" && text(*n, source) == name)
                    })
            });
            if elsewhere {
                return None;
            }
        }
    }

    let subject_text = text(subject, source);
    let mut subject_copied = false;
    let mut pieces = Vec::new();
    let mut first_branch = true;
    let body_pieces = |pieces: &mut Vec<Piece>, body: &[Node]| {
        if let (Some(first), Some(last)) = (body.first(), body.last()) {
            pieces.push(Piece::Insert(" ".into()));
            pieces.push(Piece::Copy(first.start_byte()..last.end_byte()));
        }
        pieces.push(Piece::Insert(" }".into()));
    };
    for (g, body) in groups.iter().zip(&bodies) {
        if g.is_default {
            pieces.push(Piece::Insert(if first_branch { "{" } else { " else {" }.into()));
            body_pieces(&mut pieces, body);
            continue;
        }
        pieces.push(Piece::Insert(if first_branch { "if (" } else { " else if (" }.into()));
        first_branch = false;
        for (li, label) in g.labels.iter().enumerate() {
            if li > 0 {
                pieces.push(Piece::Insert(" || ".into()));
            }
            if subject_copied {
                pieces.push(Piece::Insert(subject_text.to_owned()));
            } else {
                pieces.push(Piece::Copy(range(subject)));
                subject_copied = true;
            }
            match comparison {
                Comparison::Equality => {
                    pieces.push(Piece::Insert(" == ".into()));
                    pieces.push(Piece::Copy(range(*label)));
                }
                Comparison::Equals => {
                    pieces.push(Piece::Insert(".equals(".into()));
                    pieces.push(Piece::Copy(range(*label)));
                    pieces.push(Piece::Insert(")".into()));
                }
            }
        }
        pieces.push(Piece::Insert(") {".into()));
        body_pieces(&mut pieces, body);
    }
    Some(pieces)
}

pub(crate) fn convert(cx: &Context) -> Option<Rewrite> {
    let mut rw = Rewrite::new();
    let mut converted: Vec<Node> = Vec::new();
    for n in descendants(cx.tree.root_node()) {
        if n.kind() != "switch_expression" {
            continue;
        }
        if converted
            .iter()
            .any(|c| c.start_byte() <= n.start_byte() && n.end_byte() <= c.end_byte())
        {
            continue;
        }
        if let Some(pieces) = convert_one(n, cx.source) {
            rw.splice(range(n), pieces);
            converted.push(n);
        }
    }
    Some(rw)
}
