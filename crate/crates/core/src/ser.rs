//! Entity retrieval guided by sketches and the retrieved relations.
//!
//! Mentions come from sketches of the question, candidates from the alias
//! dictionary (top by popularity plus those touching a retrieved relation),
//! and each mention keeps its top few ranked candidates. Picking a single
//! entity is left to generation.

use std::collections::HashSet;

use serde::Serialize;

use crate::kb::{word_tokens, EntityId, KnowledgeBase, RelationName};
use crate::scoring::{ModelError, Scorer, SketchGenerator, SketchRequest};
use crate::sexpr::{extract_mentions, CLASS_SLOT, RELATION_SLOT};

/// Incident relations included in an entity's ranking text.
pub const MAX_CONTEXT_RELATIONS: usize = 32;

/// `question <relation> r1;r2;...;rk`
pub fn build_sketch_input(question: &str, relations: &[RelationName]) -> String {
    let joined: Vec<&str> = relations.iter().map(RelationName::as_str).collect();
    format!("{question} {RELATION_SLOT} {}", joined.join(";"))
}

/// A run of question word tokens matching a dictionary alias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasSpan {
    pub start: usize,
    pub end: usize,
    pub alias: String,
}

impl AliasSpan {
    fn overlaps(&self, other: &AliasSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Alias matches over the question's word tokens that are not contained in
/// a longer match, in order of position.
pub fn alias_spans(question: &str, kb: &KnowledgeBase) -> Vec<AliasSpan> {
    let tokens = word_tokens(question);
    let max = kb.max_alias_tokens();
    let mut all = Vec::new();
    for start in 0..tokens.len() {
        for end in (start + 1..=(start + max).min(tokens.len())).rev() {
            if let Some(alias) = kb.alias_for_tokens(&tokens[start..end]) {
                all.push(AliasSpan {
                    start,
                    end,
                    alias: alias.to_string(),
                });
                break;
            }
        }
    }
    all.iter()
        .filter(|s| {
            !all.iter()
                .any(|o| o != *s && o.start <= s.start && s.end <= o.end)
        })
        .cloned()
        .collect()
}

/// Builtin sketcher: proposes alias spans of the question as mentions,
/// skipping spans made up entirely of words from the retrieved relation
/// names. With no relations there is no guidance.
#[derive(Debug, Default, Clone, Copy)]
pub struct AlignedSketcher;

impl AlignedSketcher {
    pub fn surviving_spans(question: &str, relations: &[RelationName], kb: &KnowledgeBase) -> Vec<AliasSpan> {
        let schema_words: HashSet<String> = relations.iter().flat_map(|r| word_tokens(r.as_str())).collect();
        alias_spans(question, kb)
            .into_iter()
            .filter(|s| !word_tokens(&s.alias).iter().all(|t| schema_words.contains(t)))
            .collect()
    }
}

impl SketchGenerator for AlignedSketcher {
    fn sketch(&self, request: &SketchRequest<'_>, beam: usize) -> Result<Vec<String>, ModelError> {
        let spans = Self::surviving_spans(request.question, request.relations, request.kb);
        Ok(span_combinations(&spans)
            .into_iter()
            .take(beam)
            .map(|combo| render_sketch(&combo))
            .collect())
    }
}

/// Non-overlapping span subsets, larger subsets first, then longer total
/// text, then earlier position.
fn span_combinations(spans: &[AliasSpan]) -> Vec<Vec<&AliasSpan>> {
    let n = spans.len().min(12);
    let mut combos: Vec<Vec<&AliasSpan>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &spans[i]).collect::<Vec<_>>())
        .filter(|c| c.iter().enumerate().all(|(i, a)| c[i + 1..].iter().all(|b| !a.overlaps(b))))
        .collect();
    combos.sort_by_key(|c| {
        let chars: usize = c.iter().map(|s| s.alias.len()).sum();
        let positions: Vec<usize> = c.iter().map(|s| s.start).collect();
        (std::cmp::Reverse(c.len()), std::cmp::Reverse(chars), positions)
    });
    combos
}

fn render_sketch(spans: &[&AliasSpan]) -> String {
    let joins: Vec<String> = spans
        .iter()
        .map(|s| format!("(JOIN {RELATION_SLOT} [ {} ])", s.alias))
        .collect();
    let body = joins
        .into_iter()
        .reduce(|acc, j| format!("(AND {acc} {j})"))
        .unwrap_or_default();
    format!("(AND {CLASS_SLOT} {body})")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MentionDetection {
    pub input: String,
    pub sketches: Vec<String>,
    pub mentions: Vec<String>,
}

/// Union of the mentions of the top `k_l` sketches, first occurrence
/// first, case-insensitively deduplicated.
pub fn detect_mentions(
    question: &str,
    relations: &[RelationName],
    sketcher: &dyn SketchGenerator,
    kb: &KnowledgeBase,
    k_l: usize,
) -> Result<MentionDetection, ModelError> {
    let input = build_sketch_input(question, relations);
    let request = SketchRequest {
        question,
        input: &input,
        relations,
        kb,
    };
    let mut sketches = sketcher.sketch(&request, k_l)?;
    sketches.truncate(k_l);
    let mut seen = HashSet::new();
    let mut mentions = Vec::new();
    for sketch in &sketches {
        match extract_mentions(sketch) {
            Ok(found) => {
                for m in found {
                    if seen.insert(m.to_lowercase()) {
                        mentions.push(m);
                    }
                }
            }
            Err(e) => log::warn!("skipping sketch `{sketch}`: {e}"),
        }
    }
    Ok(MentionDetection {
        input,
        sketches,
        mentions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSource {
    Popularity,
    RelationConnected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub entity: EntityId,
    pub source: CandidateSource,
    pub popularity: f64,
    pub rank_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MentionCandidates {
    pub mention: String,
    pub candidates: Vec<Candidate>,
    /// The mention matched no alias.
    pub unmatched: bool,
}

/// Per mention: the `k_e1` most popular alias matches, then up to `k_e2` of
/// the remaining matches connected to a retrieved relation, both in
/// popularity order.
pub fn retrieve_candidates(
    mentions: &[String],
    kb: &KnowledgeBase,
    relations: &[RelationName],
    k_e1: usize,
    k_e2: usize,
) -> Vec<MentionCandidates> {
    mentions
        .iter()
        .map(|mention| {
            let entries = kb.entities_by_alias(mention);
            let mut candidates: Vec<Candidate> = entries
                .iter()
                .take(k_e1)
                .map(|a| Candidate {
                    entity: a.entity.clone(),
                    source: CandidateSource::Popularity,
                    popularity: a.popularity,
                    rank_score: None,
                })
                .collect();
            candidates.extend(
                entries
                    .iter()
                    .skip(k_e1)
                    .filter(|a| kb.connected_to_relations(&a.entity, relations))
                    .take(k_e2)
                    .map(|a| Candidate {
                        entity: a.entity.clone(),
                        source: CandidateSource::RelationConnected,
                        popularity: a.popularity,
                        rank_score: None,
                    }),
            );
            MentionCandidates {
                mention: mention.clone(),
                unmatched: entries.is_empty(),
                candidates,
            }
        })
        .collect()
}

/// Name (or id when unnamed) followed by up to [`MAX_CONTEXT_RELATIONS`]
/// incident relation names in ascending order.
pub fn entity_text(kb: &KnowledgeBase, entity: &EntityId) -> String {
    let mut parts = vec![kb
        .name_of(entity.as_str())
        .filter(|n| !n.trim().is_empty())
        .unwrap_or(entity.as_str())
        .to_string()];
    parts.extend(
        kb.all_incident_relations(entity)
            .into_iter()
            .take(MAX_CONTEXT_RELATIONS)
            .map(|r| r.to_string()),
    );
    parts.join(" ")
}

/// Scores candidates against the question and sorts them by score, then
/// popularity, then id.
pub fn rank_entities(
    question: &str,
    mentions: &mut [MentionCandidates],
    kb: &KnowledgeBase,
    scorer: &dyn Scorer,
) -> Result<(), ModelError> {
    for m in mentions.iter_mut() {
        let texts: Vec<String> = m.candidates.iter().map(|c| entity_text(kb, &c.entity)).collect();
        let scores = scorer.score_batch(question, &texts)?;
        for (c, s) in m.candidates.iter_mut().zip(scores) {
            c.rank_score = Some(s);
        }
        m.candidates.sort_by(|a, b| {
            let (sa, sb) = (a.rank_score.unwrap_or(0.0), b.rank_score.unwrap_or(0.0));
            sb.total_cmp(&sa)
                .then(b.popularity.total_cmp(&a.popularity))
                .then_with(|| a.entity.cmp(&b.entity))
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedMention {
    pub mention: String,
    pub entities: Vec<EntityId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SelectedEntities {
    pub mentions: Vec<SelectedMention>,
}

impl SelectedEntities {
    /// All selected entities, mention by mention, without repeats.
    pub fn flattened(&self) -> Vec<EntityId> {
        let mut seen = HashSet::new();
        self.mentions
            .iter()
            .flat_map(|m| &m.entities)
            .filter(|e| seen.insert((*e).clone()))
            .cloned()
            .collect()
    }

    /// The best entity of each mention that has one.
    pub fn top1(&self) -> Vec<EntityId> {
        let mut seen = HashSet::new();
        self.mentions
            .iter()
            .filter_map(|m| m.entities.first())
            .filter(|e| seen.insert((*e).clone()))
            .cloned()
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.mentions.iter().all(|m| m.entities.is_empty())
    }
}

/// Top `k_e3` candidates of every mention, independently.
pub fn select_entities(ranked: &[MentionCandidates], k_e3: usize) -> SelectedEntities {
    SelectedEntities {
        mentions: ranked
            .iter()
            .filter(|m| !m.candidates.is_empty())
            .map(|m| SelectedMention {
                mention: m.mention.clone(),
                entities: m.candidates.iter().take(k_e3).map(|c| c.entity.clone()).collect(),
            })
            .collect(),
    }
}
