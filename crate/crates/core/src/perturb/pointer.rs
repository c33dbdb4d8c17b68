//! Alias-pointer introduction for C.
//!
//! After `T x [= e];` (scalar type, single declarator, no qualifiers or
//! storage class) the transform declares `T *p_x = &x;` and rewrites every
//! later read of `x` in the same block as `(*p_x)`. Writes and `&x` are left
//! as they are.

use std::collections::BTreeSet;

use tree_sitter::Node;

use super::edit::{Piece, Rewrite};
use super::syntax::{children, descendants, field_of, has_ancestor, range, text};
use super::Context;

const DECLARING_PARENTS: &[&str] = &[
    "declaration",
    "init_declarator",
    "parameter_declaration",
    "array_declarator",
    "pointer_declarator",
    "function_declarator",
];

/// True when the identifier occurrence is a plain read of the variable.
fn is_read(id: Node, source: &str) -> bool {
    let Some(parent) = id.parent() else {
        return false;
    };
    match parent.kind() {
        "assignment_expression" => field_of(id) != Some("left"),
        "update_expression" => false,
        "pointer_expression" => parent
            .child_by_field_name("operator")
            .is_none_or(|op| text(op, source) != "&"),
        k if DECLARING_PARENTS.contains(&k) => false,
        "goto_statement" | "labeled_statement" => false,
        _ => true,
    }
}

/// `(name, type text)` when `decl` is an eligible scalar declaration.
fn scalar_declaration<'s>(decl: Node, source: &'s str) -> Option<(&'s str, &'s str)> {
    let parts = children(decl);
    let ty = decl.child_by_field_name("type")?;
    if !matches!(ty.kind(), "primitive_type" | "sized_type_specifier") {
        return None;
    }
    // type, declarator, ';' and nothing else (no qualifiers, storage class,
    // second declarator).
    if parts.len() != 3 {
        return None;
    }
    let declarator = decl.child_by_field_name("declarator")?;
    let name = match declarator.kind() {
        "identifier" => declarator,
        "init_declarator" => declarator
            .child_by_field_name("declarator")
            .filter(|d| d.kind() == "identifier")?,
        _ => return None,
    };
    Some((text(name, source), text(ty, source)))
}

pub(crate) fn introduce(cx: &Context) -> Option<Rewrite> {
    let source = cx.source;
    let root = cx.tree.root_node();
    let mut used: BTreeSet<&str> = BTreeSet::new();
    crate::corpus::tokenize::for_each_token(cx.tree, source, |n| {
        used.insert(text(n, source));
    });
    let mut aliases: BTreeSet<String> = BTreeSet::new();
    let mut rw = Rewrite::new();
    for func in descendants(root)
        .into_iter()
        .filter(|n| n.kind() == "function_definition")
    {
        let all = descendants(func);
        let declared_count = |name: &str| {
            all.iter()
                .filter(|n| n.kind() == "identifier" && text(**n, source) == name)
                .filter(|n| {
                    n.parent()
                        .is_some_and(|p| DECLARING_PARENTS.contains(&p.kind()))
                        && field_of(**n) == Some("declarator")
                })
                .count()
        };
        for decl in all.iter().filter(|n| n.kind() == "declaration") {
            let Some(block) = decl.parent().filter(|p| p.kind() == "compound_statement") else {
                continue;
            };
            if has_ancestor(*decl, func, &["function_definition"]) {
                continue;
            }
            let Some((name, ty)) = scalar_declaration(*decl, source) else {
                continue;
            };
            if declared_count(name) != 1 {
                continue;
            }
            let mut alias = format!("p_{name}");
            while used.contains(alias.as_str()) || aliases.contains(&alias) {
                alias.push('_');
            }
            aliases.insert(alias.clone());
            rw.insert(decl.end_byte(), format!(" {ty} *{alias} = &{name};"));
            for id in all.iter().filter(|n| {
                n.kind() == "identifier"
                    && text(**n, source) == name
                    && n.start_byte() >= decl.end_byte()
                    && n.end_byte() <= block.end_byte()
            }) {
                if is_read(*id, source) {
                    rw.splice(
                        range(*id),
                        vec![
                            Piece::Insert("(*".into()),
                            Piece::Replace {
                                orig: range(*id),
                                text: alias.clone(),
                            },
                            Piece::Insert(")".into()),
                        ],
                    );
                }
            }
        }
    }
    Some(rw)
}
