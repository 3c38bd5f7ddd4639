//! Question-to-relation retrieval.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::kb::{word_tokens, KnowledgeBase, RelationName};
use crate::scoring::{ModelError, Scorer};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredRelation {
    pub relation: RelationName,
    pub score: f64,
}

/// Relations sorted by score descending, then name ascending.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RankedRelations {
    pub items: Vec<ScoredRelation>,
}

impl RankedRelations {
    pub fn names(&self) -> Vec<RelationName> {
        self.items.iter().map(|s| s.relation.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.items.iter().any(|s| s.relation.as_str() == relation)
    }

    pub fn truncated(&self, k: usize) -> RankedRelations {
        RankedRelations {
            items: self.items.iter().take(k).cloned().collect(),
        }
    }
}

/// Text shown to the scorer for a relation: the dotted name with dots and
/// underscores turned into spaces.
pub fn relation_text(relation: &str) -> String {
    relation.replace(['.', '_'], " ")
}

/// Scores every ontology relation and keeps the best `k`. With `prefilter`
/// only relations sharing a word with the question are scored, unless none
/// do.
pub fn retrieve_relations(
    question: &str,
    kb: &KnowledgeBase,
    scorer: &dyn Scorer,
    k: usize,
    prefilter: bool,
) -> Result<RankedRelations, ModelError> {
    let mut pool: Vec<&RelationName> = kb.relations().iter().collect();
    if prefilter {
        let q: HashSet<String> = word_tokens(question).into_iter().collect();
        let kept: Vec<&RelationName> = pool
            .iter()
            .copied()
            .filter(|r| word_tokens(r.as_str()).iter().any(|t| q.contains(t)))
            .collect();
        if !kept.is_empty() {
            pool = kept;
        }
    }
    let texts: Vec<String> = pool.iter().map(|r| relation_text(r.as_str())).collect();
    let scores = scorer.score_batch(question, &texts)?;
    let mut items: Vec<ScoredRelation> = pool
        .into_iter()
        .zip(scores)
        .map(|(r, score)| ScoredRelation {
            relation: r.clone(),
            score,
        })
        .collect();
    items.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.relation.cmp(&b.relation)));
    items.truncate(k);
    Ok(RankedRelations { items })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("recall is undefined for an empty gold relation set")]
pub struct EmptyGold;

/// Fraction of distinct gold relations present in `ranked`.
pub fn relation_recall(ranked: &RankedRelations, gold: &[RelationName]) -> Result<f64, EmptyGold> {
    let gold: HashSet<&str> = gold.iter().map(RelationName::as_str).collect();
    if gold.is_empty() {
        return Err(EmptyGold);
    }
    let hit = gold.iter().filter(|g| ranked.contains(g)).count();
    Ok(hit as f64 / gold.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(names: &[&str]) -> RankedRelations {
        RankedRelations {
            items: names
                .iter()
                .map(|n| ScoredRelation {
                    relation: (*n).into(),
                    score: 0.5,
                })
                .collect(),
        }
    }

    #[test]
    fn recall_values() {
        let r = ranked(&["a.b.c", "a.b.d"]);
        assert_eq!(relation_recall(&r, &["a.b.c".into()]), Ok(1.0));
        assert_eq!(relation_recall(&r, &["x.y.z".into()]), Ok(0.0));
        assert_eq!(relation_recall(&r, &["a.b.c".into(), "x.y.z".into()]), Ok(0.5));
        assert_eq!(relation_recall(&r, &[]), Err(EmptyGold));
    }

    #[test]
    fn relation_text_splits_separators() {
        assert_eq!(relation_text("cvg.computer_game_rating"), "cvg computer game rating");
    }
}
