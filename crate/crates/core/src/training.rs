//! Training data emission for the relation scorer, the generator and the
//! fallback ranker.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eval::DatasetRow;
use crate::fallback::enumerate_two_hop;
use crate::kb::{EntityId, KnowledgeBase, RelationName};
use crate::relations::retrieve_relations;
use crate::scoring::{ModelError, Scorer};
use crate::ser::{SelectedEntities, SelectedMention};
use crate::sexpr::{canonicalize, parse, LogicalForm};
use crate::slfg::{build_contexts, build_prompt};

pub const DEFAULT_NEGATIVES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    RelationScorer,
    Generator,
    FallbackRanker,
}

impl std::str::FromStr for PairKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relation-scorer" => Ok(PairKind::RelationScorer),
            "generator" => Ok(PairKind::Generator),
            "fallback-ranker" => Ok(PairKind::FallbackRanker),
            other => Err(format!("unknown pair kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TrainingPair {
    Relation {
        question: String,
        relation: RelationName,
        label: u8,
    },
    Generation {
        prompt: String,
        target: String,
    },
    Ranking {
        question: String,
        positive: String,
        negatives: Vec<String>,
    },
}

#[derive(Clone, Copy)]
pub struct TrainingOptions<'a> {
    pub negatives: usize,
    pub seed: u64,
    /// Used to pick the relations shown in generator prompts.
    pub scorer: &'a dyn Scorer,
    pub k_relations: usize,
}

#[derive(Debug, Default)]
pub struct Emission {
    pub pairs: Vec<TrainingPair>,
    pub warnings: Vec<String>,
    pub skipped: usize,
}

fn first_seen<T: Clone + Eq + std::hash::Hash>(items: Vec<&T>) -> Vec<T> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|x| seen.insert((*x).clone())).cloned().collect()
}

/// Parses the gold form and checks that every schema item it names exists.
fn gold_form(row: &DatasetRow, kb: &KnowledgeBase) -> Result<LogicalForm, String> {
    let text = row.s_expression.as_deref().ok_or("no gold form")?;
    let lf = parse(text, kb).map_err(|e| e.to_string())?;
    if let Some(r) = lf.root().relations().into_iter().find(|r| !kb.has_relation(r.as_str())) {
        return Err(format!("relation `{r}` is not in the KB"));
    }
    if let Some(e) = lf.root().entities().into_iter().find(|e| !kb.has_entity(e.as_str())) {
        return Err(format!("entity `{e}` is not in the KB"));
    }
    Ok(lf)
}

pub fn emit_training_pairs(
    rows: &[DatasetRow],
    kb: &KnowledgeBase,
    kind: PairKind,
    options: TrainingOptions<'_>,
) -> Result<Emission, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut out = Emission::default();
    for row in rows {
        let lf = match gold_form(row, kb) {
            Ok(lf) => lf,
            Err(why) => {
                let msg = format!("skipping `{}`: {why}", row.qid);
                log::warn!("{msg}");
                out.warnings.push(msg);
                out.skipped += 1;
                continue;
            }
        };
        let gold_relations: Vec<RelationName> = first_seen(lf.root().relations());
        let gold_entities: Vec<EntityId> = first_seen(lf.root().entities());
        match kind {
            PairKind::RelationScorer => {
                for r in &gold_relations {
                    out.pairs.push(TrainingPair::Relation {
                        question: row.question.clone(),
                        relation: r.clone(),
                        label: 1,
                    });
                }
                let mut pool: Vec<&RelationName> =
                    kb.relations().iter().filter(|r| !gold_relations.contains(r)).collect();
                if pool.len() < options.negatives {
                    let msg = format!(
                        "`{}`: only {} negative relations available, {} requested",
                        row.qid,
                        pool.len(),
                        options.negatives
                    );
                    log::warn!("{msg}");
                    out.warnings.push(msg);
                }
                pool.shuffle(&mut rng);
                for r in pool.into_iter().take(options.negatives) {
                    out.pairs.push(TrainingPair::Relation {
                        question: row.question.clone(),
                        relation: r.clone(),
                        label: 0,
                    });
                }
            }
            PairKind::Generator => {
                let mut relations =
                    retrieve_relations(&row.question, kb, options.scorer, options.k_relations, false)?.names();
                for r in &gold_relations {
                    if !relations.contains(r) {
                        relations.push(r.clone());
                    }
                }
                let selected = SelectedEntities {
                    mentions: gold_entities
                        .iter()
                        .map(|e| SelectedMention {
                            mention: kb.name_of(e.as_str()).unwrap_or(e.as_str()).to_string(),
                            entities: vec![e.clone()],
                        })
                        .collect(),
                };
                let contexts = build_contexts(&relations, &selected, kb);
                out.pairs.push(TrainingPair::Generation {
                    prompt: build_prompt(&row.question, &contexts.relations, &contexts.entities),
                    target: canonicalize(&lf).to_string(),
                });
            }
            PairKind::FallbackRanker => {
                let positive = canonicalize(&lf).to_string();
                let mut negatives: Vec<String> = enumerate_two_hop(&gold_entities, kb)
                    .into_iter()
                    .map(|c| c.text)
                    .filter(|t| *t != positive)
                    .collect();
                negatives.shuffle(&mut rng);
                negatives.truncate(options.negatives);
                out.pairs.push(TrainingPair::Ranking {
                    question: row.question.clone(),
                    positive,
                    negatives,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_jsonl(pairs: &[TrainingPair], mut w: impl Write) -> io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        writeln!(w)?;
    }
    Ok(())
}
