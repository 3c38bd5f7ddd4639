//! Builtin generator: enumerates schema-valid compositions of the retrieved
//! relations, selected entities and their classes, and ranks them by
//! similarity to the question.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use crate::kb::{word_tokens, ClassName, EntityId, KnowledgeBase, Literal, LiteralKind, RelationName};
use crate::scoring::{GenerationRequest, Generator, ModelError, ScoredText, Scorer};
use crate::sexpr::{CmpOp, Expr};

use super::schema::{possible_classes, schema_valid};

/// Added per relation whose final name segment is spelled out in the
/// question.
pub const RELATION_BONUS: f64 = 0.05;

pub struct EnumerativeGenerator {
    scorer: Arc<dyn Scorer>,
}

impl EnumerativeGenerator {
    pub fn new(scorer: Arc<dyn Scorer>) -> EnumerativeGenerator {
        EnumerativeGenerator { scorer }
    }
}

impl Generator for EnumerativeGenerator {
    fn generate(&self, request: &GenerationRequest<'_>, beam: usize) -> Result<Vec<ScoredText>, ModelError> {
        enumerate_schema_candidates(
            request.question,
            request.relations,
            request.entities,
            request.kb,
            self.scorer.as_ref(),
            beam,
        )
    }
}

/// Top `k_o` enumerated forms, best first, ties broken by text.
pub fn enumerate_schema_candidates(
    question: &str,
    relations: &[RelationName],
    entities: &[EntityId],
    kb: &KnowledgeBase,
    scorer: &dyn Scorer,
    k_o: usize,
) -> Result<Vec<ScoredText>, ModelError> {
    let forms = enumerate_forms(question, relations, entities, kb);
    let texts: Vec<String> = forms.iter().map(|f| verbalize(f, kb)).collect();
    let scores = scorer.score_batch(question, &texts)?;
    let q_tokens: HashSet<String> = word_tokens(question).iter().map(|t| stem(t)).collect();
    let mut scored: Vec<ScoredText> = forms
        .iter()
        .zip(scores)
        .map(|(f, s)| ScoredText {
            text: f.to_string(),
            score: s + RELATION_BONUS * (matched_relations(f, &q_tokens) as f64 + class_overlap(f, &q_tokens))
                - RELATION_BONUS * uncued_operators(f, &q_tokens) as f64,
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text)));
    scored.truncate(k_o);
    Ok(scored)
}

/// Every schema-valid instance of the templates, without duplicates, in a
/// deterministic order.
pub fn enumerate_forms(
    question: &str,
    relations: &[RelationName],
    entities: &[EntityId],
    kb: &KnowledgeBase,
) -> Vec<Expr> {
    let relations: Vec<&RelationName> = relations.iter().filter(|r| kb.has_relation(r.as_str())).collect();
    let classes: BTreeSet<ClassName> = relations
        .iter()
        .filter_map(|r| kb.domain_range(r.as_str()).ok())
        .flat_map(|(d, r)| [d.clone(), r.clone()])
        .collect();
    let directed = |r: &RelationName| [Expr::Relation(r.clone()), Expr::reverse(Expr::Relation(r.clone()))];

    let mut one_hop = Vec::new();
    for e in entities {
        for r in &relations {
            for b in directed(r) {
                one_hop.push(Expr::join(b, Expr::Entity(e.clone())));
            }
        }
    }
    one_hop.retain(|f| schema_valid(f, kb));

    let mut two_hop = Vec::new();
    for t in &one_hop {
        for r in &relations {
            for b in directed(r) {
                if !backtracks(&b, t) {
                    two_hop.push(Expr::join(b, t.clone()));
                }
            }
        }
    }
    two_hop.retain(|f| schema_valid(f, kb));

    let numbers = question_numbers(question);
    let mut comparisons = Vec::new();
    let mut superlatives = Vec::new();
    for r in &relations {
        let Ok((domain, range)) = kb.domain_range(r.as_str()) else { continue };
        let Some(kind) = LiteralKind::for_range_class(range.as_str()).filter(|k| k.is_comparable()) else {
            continue;
        };
        for &n in &numbers {
            if let Some(lit) = number_literal(n, kind) {
                for op in CmpOp::ALL {
                    comparisons.push(Expr::compare(op, Expr::Relation((*r).clone()), lit.clone()));
                }
            }
        }
        let class = Expr::Class(domain.clone());
        superlatives.push(Expr::argmax(class.clone(), Expr::Relation((*r).clone())));
        superlatives.push(Expr::argmin(class, Expr::Relation((*r).clone())));
    }

    let base: Vec<Expr> = one_hop.into_iter().chain(two_hop).chain(comparisons).collect();
    let mut typed = Vec::new();
    for t in &base {
        for c in possible_classes(t, kb).unwrap_or_default() {
            if classes.contains(&c) {
                typed.push(Expr::and(Expr::Class(c), t.clone()));
            }
        }
    }
    let counts: Vec<Expr> = base
        .iter()
        .chain(&typed)
        .filter(|t| !matches!(t, Expr::Compare(..)))
        .map(|t| Expr::count(t.clone()))
        .collect();

    let mut seen = HashSet::new();
    base.into_iter()
        .chain(typed)
        .chain(superlatives)
        .chain(counts)
        .filter(|f| seen.insert(f.to_string()))
        .collect()
}

/// True when joining `outer` onto `inner` walks straight back along the
/// relation `inner` just followed.
fn backtracks(outer: &Expr, inner: &Expr) -> bool {
    let Expr::Join(b, _) = inner else { return false };
    match (outer, b.as_ref()) {
        (Expr::Relation(a), Expr::Reverse(r)) | (Expr::Reverse(r), Expr::Relation(a)) => {
            matches!(r.as_ref(), Expr::Relation(x) if x == a)
        }
        _ => false,
    }
}

/// Integers written in the question.
fn question_numbers(question: &str) -> Vec<i64> {
    let mut out: Vec<i64> = word_tokens(question)
        .iter()
        .filter(|t| t.len() <= 9)
        .filter_map(|t| t.parse().ok())
        .collect();
    out.dedup();
    out
}

fn number_literal(n: i64, kind: LiteralKind) -> Option<Literal> {
    match kind {
        LiteralKind::Integer | LiteralKind::Float => Some(Literal::integer(n)),
        LiteralKind::Date if (1000..=2999).contains(&n) => Literal::new(&n.to_string(), LiteralKind::Date).ok(),
        _ => None,
    }
}

fn humanize(dotted: &str) -> String {
    let segments: Vec<&str> = dotted.split('.').collect();
    let tail = if segments.len() > 1 { &segments[1..] } else { &segments[..] };
    tail.join(" ").replace('_', " ")
}

fn operator_words(e: &Expr) -> &'static str {
    match e {
        Expr::Count(_) => "how many number of",
        Expr::ArgMax(..) => "most largest highest latest maximum",
        Expr::ArgMin(..) => "least smallest lowest earliest minimum fewest",
        Expr::Compare(CmpOp::Lt, ..) => "less than before below under",
        Expr::Compare(CmpOp::Le, ..) => "at most or before",
        Expr::Compare(CmpOp::Gt, ..) => "more than after above over",
        Expr::Compare(CmpOp::Ge, ..) => "at least or after",
        _ => "",
    }
}

/// Words that signal an operator in a question.
fn cue_words(e: &Expr) -> &'static [&'static str] {
    match e {
        Expr::Count(_) => &["many", "count", "number", "total"],
        Expr::ArgMax(..) => &["most", "largest", "highest", "latest", "maximum", "longest", "biggest", "greatest", "newest"],
        Expr::ArgMin(..) => &["least", "smallest", "lowest", "earliest", "minimum", "fewest", "shortest", "oldest", "first"],
        Expr::Compare(CmpOp::Lt | CmpOp::Le, ..) => &["less", "fewer", "before", "below", "under", "most", "within"],
        Expr::Compare(CmpOp::Gt | CmpOp::Ge, ..) => &["more", "greater", "after", "above", "over", "least", "since"],
        _ => &[],
    }
}

/// Aggregation and comparison nodes none of whose cue words occur in the
/// question.
fn uncued_operators(e: &Expr, question: &HashSet<String>) -> usize {
    let mut n = 0;
    e.walk(&mut |node| {
        let cues = cue_words(node);
        if !cues.is_empty() && !cues.iter().any(|w| question.contains(*w)) {
            n += 1;
        }
    });
    n
}

/// Sum over class constraints of the fraction of the class's humanized
/// words found in the question.
fn class_overlap(e: &Expr, question: &HashSet<String>) -> f64 {
    e.classes()
        .iter()
        .map(|c| {
            let words = word_tokens(&humanize(c.as_str()));
            let hits = words.iter().filter(|w| question.contains(&stem(w))).count();
            if words.is_empty() {
                0.0
            } else {
                hits as f64 / words.len() as f64
            }
        })
        .sum()
}

/// Natural-language rendering of a form for scoring: entity names,
/// humanized schema items and operator cue words.
pub fn verbalize(e: &Expr, kb: &KnowledgeBase) -> String {
    let mut words = Vec::new();
    e.walk(&mut |node| {
        let w = operator_words(node);
        if !w.is_empty() {
            words.push(w.to_string());
        }
        match node {
            Expr::Entity(id) => words.push(kb.name_of(id.as_str()).unwrap_or(id.as_str()).to_string()),
            Expr::Class(c) => words.push(humanize(c.as_str())),
            Expr::Relation(r) => words.push(humanize(r.as_str())),
            Expr::Literal(l) => words.push(l.lexical().to_string()),
            Expr::Compare(_, _, n) => words.push(n.lexical().to_string()),
            _ => {}
        }
    });
    words.join(" ")
}

fn stem(token: &str) -> String {
    match token.strip_suffix('s') {
        Some(s) if s.len() >= 3 && !s.ends_with('s') => s.to_string(),
        _ => token.to_string(),
    }
}

/// Distinct relations whose last segment's words all occur in the
/// question.
fn matched_relations(e: &Expr, question: &HashSet<String>) -> usize {
    let distinct: BTreeSet<&RelationName> = e.relations().into_iter().collect();
    distinct
        .iter()
        .filter(|r| {
            let last = r.as_str().rsplit('.').next().unwrap_or_default();
            let tokens = word_tokens(last);
            !tokens.is_empty() && tokens.iter().all(|t| question.contains(&stem(t)))
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn humanized_names() {
        assert_eq!(humanize("book.literary_series.author"), "literary series author");
        assert_eq!(humanize("author"), "author");
    }

    #[test]
    fn numbers_and_literals() {
        assert_eq!(question_numbers("books before 1950 with 300 pages"), [1950, 300]);
        assert_eq!(number_literal(1950, LiteralKind::Date).unwrap().to_typed_string(), "1950^^date");
        assert!(number_literal(5, LiteralKind::Date).is_none());
    }

    #[test]
    fn stems() {
        assert_eq!(stem("units"), "unit");
        assert_eq!(stem("glass"), "glass");
        assert_eq!(stem("is"), "is");
    }
}
