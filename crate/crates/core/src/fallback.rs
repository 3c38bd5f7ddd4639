//! Two-hop enumeration around the top entities, used when no generated
//! candidate is executable.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::kb::{Direction, EntityId, KnowledgeBase, RelationName, Value};
use crate::scoring::{ModelError, Scorer};
use crate::sexpr::{evaluate, AnswerSet, Expr, LogicalForm};

pub const MAX_CANDIDATES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hop {
    pub relation: RelationName,
    /// `Out` follows the relation from subject to object.
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumeratedCandidate {
    #[serde(skip)]
    pub lf: LogicalForm,
    pub text: String,
    pub entity: EntityId,
    pub hops: Vec<Hop>,
    pub score: f64,
}

/// The unary set reached by following `hop` from `inner`.
fn step(hop: &Hop, inner: Expr) -> Expr {
    let rel = Expr::Relation(hop.relation.clone());
    match hop.direction {
        Direction::Out => Expr::join(Expr::reverse(rel), inner),
        Direction::In => Expr::join(rel, inner),
    }
}

fn reached(kb: &KnowledgeBase, from: &BTreeSet<Value>, hop: &Hop) -> BTreeSet<Value> {
    from.iter()
        .flat_map(|v| kb.neighbors_of_value(v, hop.relation.as_str(), hop.direction))
        .collect()
}

fn incident(kb: &KnowledgeBase, values: &BTreeSet<Value>) -> Vec<Hop> {
    let mut hops = BTreeSet::new();
    for v in values {
        for d in [Direction::Out, Direction::In] {
            for r in kb.incident_relations(v, d) {
                hops.insert((r.clone(), d));
            }
        }
    }
    hops.into_iter()
        .map(|(relation, direction)| Hop { relation, direction })
        .collect()
}

/// Every one-hop form around each entity and every two-hop extension of a
/// non-empty one-hop form, skipping a second hop that walks straight back
/// along the first. Only forms with a non-empty answer are produced. At
/// most [`MAX_CANDIDATES`] are returned.
pub fn enumerate_two_hop(entities: &[EntityId], kb: &KnowledgeBase) -> Vec<EnumeratedCandidate> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |out: &mut Vec<EnumeratedCandidate>, entity: &EntityId, hops: Vec<Hop>| -> bool {
        if out.len() >= MAX_CANDIDATES {
            return false;
        }
        let expr = hops.iter().fold(Expr::Entity(entity.clone()), |inner, h| step(h, inner));
        let text = expr.to_string();
        if seen.insert(text.clone()) {
            let lf = LogicalForm::new(expr).expect("join chains are well typed");
            out.push(EnumeratedCandidate {
                lf,
                text,
                entity: entity.clone(),
                hops,
                score: 0.0,
            });
        }
        true
    };
    'outer: for e in entities {
        let start = BTreeSet::from([Value::Entity(e.clone())]);
        for first in incident(kb, &start) {
            let mid = reached(kb, &start, &first);
            if mid.is_empty() {
                continue;
            }
            if !push(&mut out, e, vec![first.clone()]) {
                break 'outer;
            }
            for second in incident(kb, &mid) {
                if second.relation == first.relation && second.direction == first.direction.flip() {
                    continue;
                }
                if !push(&mut out, e, vec![first.clone(), second]) {
                    break 'outer;
                }
            }
        }
    }
    if out.len() >= MAX_CANDIDATES {
        log::warn!("fallback enumeration capped at {MAX_CANDIDATES} candidates");
    }
    out
}

/// Canonical text with entity ids replaced by their names.
pub fn named_text(c: &EnumeratedCandidate, kb: &KnowledgeBase) -> String {
    let mut text = c.text.clone();
    for id in c.lf.root().entities() {
        if let Some(name) = kb.name_of(id.as_str()) {
            text = text.replace(id.as_str(), name);
        }
    }
    text
}

/// Sorted by similarity of the named text to the question, then by text.
pub fn rank_candidates(
    question: &str,
    mut candidates: Vec<EnumeratedCandidate>,
    scorer: &dyn Scorer,
    kb: &KnowledgeBase,
) -> Result<Vec<EnumeratedCandidate>, ModelError> {
    let texts: Vec<String> = candidates.iter().map(|c| named_text(c, kb)).collect();
    let scores = scorer.score_batch(question, &texts)?;
    for (c, s) in candidates.iter_mut().zip(scores) {
        c.score = s;
    }
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text)));
    Ok(candidates)
}

/// Index and answer of the first candidate with a non-empty answer.
pub fn fallback_answer(ranked: &[EnumeratedCandidate], kb: &KnowledgeBase) -> Option<(usize, AnswerSet)> {
    ranked.iter().enumerate().find_map(|(i, c)| match evaluate(&c.lf, kb) {
        Ok(a) if !a.is_empty() => Some((i, a)),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::LoadMode;
    use crate::scoring::LexicalScorer;

    fn kb() -> KnowledgeBase {
        let mut b = KnowledgeBase::builder();
        b.triple("x.a", "x.a.p", "x.b");
        b.triple("x.b", "x.b.q", "x.c");
        b.fact("m.1", "x.a.p", Value::Entity("m.2".into()));
        b.fact("m.2", "x.b.q", Value::Entity("m.3".into()));
        b.name("m.1", "One");
        b.build(LoadMode::Strict).unwrap()
    }

    #[test]
    fn two_hop_paths() {
        let kb = kb();
        let texts: Vec<String> = enumerate_two_hop(&["m.1".into()], &kb).into_iter().map(|c| c.text).collect();
        assert_eq!(texts, ["(JOIN (R x.a.p) m.1)", "(JOIN (R x.b.q) (JOIN (R x.a.p) m.1))"]);
        let texts: Vec<String> = enumerate_two_hop(&["m.3".into()], &kb).into_iter().map(|c| c.text).collect();
        assert_eq!(texts, ["(JOIN x.b.q m.3)", "(JOIN x.a.p (JOIN x.b.q m.3))"]);
        assert!(enumerate_two_hop(&[], &kb).is_empty());
    }

    #[test]
    fn ranking_and_answer() {
        let kb = kb();
        let cands = enumerate_two_hop(&["m.1".into()], &kb);
        assert_eq!(named_text(&cands[0], &kb), "(JOIN (R x.a.p) One)");
        let ranked = rank_candidates("what is q of p of One", cands, &LexicalScorer, &kb).unwrap();
        let (i, a) = fallback_answer(&ranked, &kb).unwrap();
        assert_eq!(i, 0);
        assert!(!a.is_empty());
        assert!(fallback_answer(&[], &kb).is_none());
    }
}
