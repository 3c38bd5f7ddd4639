//! Ontology compatibility of join compositions.
//!
//! Two classes are compatible when they are equal or share a member, so a
//! join whose two sides can meet on some entity in the KB is accepted.

use std::collections::BTreeSet;

use crate::kb::{ClassName, KnowledgeBase, LiteralKind};
use crate::sexpr::Expr;

type Classes = BTreeSet<ClassName>;

fn literal_classes(kind: LiteralKind) -> Classes {
    let mut kinds = vec![kind];
    if kind == LiteralKind::Integer {
        kinds.push(LiteralKind::Float);
    }
    kinds
        .into_iter()
        .flat_map(|k| k.range_classes().iter().map(|c| ClassName::from(*c)))
        .collect()
}

fn compatible(kb: &KnowledgeBase, a: &ClassName, b: &ClassName) -> bool {
    if a == b {
        return true;
    }
    match (kb.members_of(a.as_str()), kb.members_of(b.as_str())) {
        (Some(x), Some(y)) => {
            let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
            small.iter().any(|e| large.contains(e))
        }
        _ => false,
    }
}

fn overlap(kb: &KnowledgeBase, a: &Classes, b: &Classes) -> bool {
    a.iter().any(|x| b.iter().any(|y| compatible(kb, x, y)))
}

/// Possible classes of a unary expression's members, `None` when
/// unconstrained. `Err` marks an invalid join below.
fn unary_classes(e: &Expr, kb: &KnowledgeBase) -> Result<Option<Classes>, ()> {
    match e {
        Expr::Entity(id) => Ok(Some(kb.classes_of(id.as_str()).clone())),
        Expr::Class(c) => Ok(Some(BTreeSet::from([c.clone()]))),
        Expr::Literal(l) => Ok(Some(literal_classes(l.kind()))),
        Expr::And(a, b) => {
            let (a, b) = (unary_classes(a, kb)?, unary_classes(b, kb)?);
            Ok(match (a, b) {
                (Some(mut a), Some(b)) => {
                    a.extend(b);
                    Some(a)
                }
                (a, b) => a.or(b),
            })
        }
        Expr::Join(b, u) => {
            let (dom, rng) = binary_classes(b, kb)?;
            if let Some(u) = unary_classes(u, kb)? {
                if !overlap(kb, &rng, &u) {
                    return Err(());
                }
            }
            Ok(Some(dom))
        }
        Expr::ArgMax(u, b) | Expr::ArgMin(u, b) => {
            binary_classes(b, kb)?;
            unary_classes(u, kb)
        }
        Expr::Compare(_, b, _) => {
            let (dom, _) = binary_classes(b, kb)?;
            Ok(Some(dom))
        }
        Expr::Count(u) => {
            unary_classes(u, kb)?;
            Ok(None)
        }
        Expr::Relation(_) | Expr::Reverse(_) => Err(()),
    }
}

/// (domain side, range side) of a binary expression.
fn binary_classes(e: &Expr, kb: &KnowledgeBase) -> Result<(Classes, Classes), ()> {
    match e {
        Expr::Relation(r) => {
            let (d, rg) = kb.domain_range(r.as_str()).map_err(|_| ())?;
            Ok((BTreeSet::from([d.clone()]), BTreeSet::from([rg.clone()])))
        }
        Expr::Reverse(b) => {
            let (d, r) = binary_classes(b, kb)?;
            Ok((r, d))
        }
        Expr::Join(b1, b2) => {
            let (d1, r1) = binary_classes(b1, kb)?;
            let (d2, r2) = binary_classes(b2, kb)?;
            if !overlap(kb, &r1, &d2) {
                return Err(());
            }
            Ok((d1, r2))
        }
        _ => Err(()),
    }
}

/// True when every join in `e` connects compatible classes and every
/// relation is declared. Comparisons and superlatives are not checked
/// against their literal values.
pub fn schema_valid(e: &Expr, kb: &KnowledgeBase) -> bool {
    unary_classes(e, kb).is_ok()
}

/// Classes the members of a valid unary expression may belong to.
pub fn possible_classes(e: &Expr, kb: &KnowledgeBase) -> Option<Classes> {
    unary_classes(e, kb).ok().flatten()
}
