//! End-to-end question answering: relation retrieval, entity retrieval,
//! generation with executability filtering, then the two-hop fallback.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fallback::{enumerate_two_hop, fallback_answer, rank_candidates, EnumeratedCandidate};
use crate::kb::KnowledgeBase;
use crate::relations::{retrieve_relations, RankedRelations};
use crate::scoring::{
    ExternalConfig, ExternalModel, GenerationRequest, Generator, LexicalScorer, ModelError, ScoredText, Scorer,
    SketchGenerator,
};
use crate::ser::{
    detect_mentions, rank_entities, retrieve_candidates, select_entities, AlignedSketcher, MentionCandidates,
    MentionDetection, SelectedEntities,
};
use crate::sexpr::AnswerSet;
use crate::slfg::{build_contexts, build_prompt, generate_and_select, EnumerativeGenerator, GenerationResult, SchemaContexts};

pub const TRACE_VERSION: u32 = 1;
pub const BUILTIN: &str = "builtin";
/// Generator spec that produces no candidates.
pub const NO_GENERATOR: &str = "none";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub k_relations: usize,
    pub k_sketches: usize,
    pub k_pop: usize,
    pub k_conn: usize,
    pub k_entities: usize,
    pub k_beam: usize,
    pub fallback_enabled: bool,
    pub scorer: String,
    pub generator: String,
    pub sketcher: String,
    pub seed: u64,
    pub workers: usize,
    /// Only score relations sharing a word with the question.
    pub relation_prefilter: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_relations: 20,
            k_sketches: 3,
            k_pop: 1,
            k_conn: 9,
            k_entities: 2,
            k_beam: 10,
            fallback_enabled: true,
            scorer: BUILTIN.into(),
            generator: BUILTIN.into(),
            sketcher: BUILTIN.into(),
            seed: 13,
            workers: 1,
            relation_prefilter: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl PipelineConfig {
    /// Defaults tuned for GrailQA-style questions.
    pub fn grailqa() -> PipelineConfig {
        PipelineConfig::default()
    }

    /// Defaults tuned for WebQSP-style questions.
    pub fn webqsp() -> PipelineConfig {
        PipelineConfig {
            k_sketches: 4,
            k_pop: 3,
            k_conn: 7,
            ..PipelineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            (self.k_relations >= 1, "k_relations must be at least 1"),
            (self.k_beam >= 1, "k_beam must be at least 1"),
            (self.k_sketches >= 1, "k_sketches must be at least 1"),
            (self.k_entities >= 1, "k_entities must be at least 1"),
            (self.k_pop + self.k_conn >= 1, "k_pop + k_conn must be at least 1"),
            (self.workers >= 1, "workers must be at least 1"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(ConfigError(msg.to_string())),
            None => Ok(()),
        }
    }
}

struct NoGenerator;

impl Generator for NoGenerator {
    fn generate(&self, _: &GenerationRequest<'_>, _: usize) -> Result<Vec<ScoredText>, ModelError> {
        Ok(Vec::new())
    }
}

/// The three pluggable components.
#[derive(Clone)]
pub struct Models {
    pub scorer: Arc<dyn Scorer>,
    pub generator: Arc<dyn Generator>,
    pub sketcher: Arc<dyn SketchGenerator>,
}

impl Models {
    pub fn builtin() -> Models {
        let scorer: Arc<dyn Scorer> = Arc::new(LexicalScorer);
        Models {
            generator: Arc::new(EnumerativeGenerator::new(scorer.clone())),
            sketcher: Arc::new(AlignedSketcher),
            scorer,
        }
    }

    /// Resolves each spec: `builtin`, an HTTP URL or `cmd:<program>`; the
    /// generator also accepts `none`.
    pub fn from_config(config: &PipelineConfig, external: ExternalConfig) -> Result<Models, ModelError> {
        let scorer: Arc<dyn Scorer> = match config.scorer.as_str() {
            BUILTIN => Arc::new(LexicalScorer),
            spec => Arc::new(ExternalModel::from_spec(spec, external)?),
        };
        let generator: Arc<dyn Generator> = match config.generator.as_str() {
            BUILTIN => Arc::new(EnumerativeGenerator::new(scorer.clone())),
            NO_GENERATOR => Arc::new(NoGenerator),
            spec => Arc::new(ExternalModel::from_spec(spec, external)?),
        };
        let sketcher: Arc<dyn SketchGenerator> = match config.sketcher.as_str() {
            BUILTIN => Arc::new(AlignedSketcher),
            spec => Arc::new(ExternalModel::from_spec(spec, external)?),
        };
        Ok(Models {
            scorer,
            generator,
            sketcher,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FallbackTrace {
    pub top_entities: Vec<crate::kb::EntityId>,
    pub candidates: Vec<EnumeratedCandidate>,
    pub chosen: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalAnswer {
    pub sexpr: String,
    pub answers: AnswerSet,
}

/// Every intermediate value of one question.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub trace_version: u32,
    pub question: String,
    pub relations: RankedRelations,
    pub sketches: MentionDetection,
    pub candidates: Vec<MentionCandidates>,
    pub selected: SelectedEntities,
    pub contexts: SchemaContexts,
    pub prompt: String,
    pub generation: GenerationResult,
    pub fallback: Option<FallbackTrace>,
    pub used_fallback: bool,
    #[serde(rename = "final")]
    pub final_answer: Option<FinalAnswer>,
}

pub struct Pipeline<'a> {
    kb: &'a KnowledgeBase,
    config: PipelineConfig,
    models: Models,
}

impl<'a> Pipeline<'a> {
    pub fn new(kb: &'a KnowledgeBase, config: PipelineConfig, models: Models) -> Pipeline<'a> {
        Pipeline { kb, config, models }
    }

    pub fn builtin(kb: &'a KnowledgeBase, config: PipelineConfig) -> Pipeline<'a> {
        Pipeline::new(kb, config, Models::builtin())
    }

    pub fn kb(&self) -> &KnowledgeBase {
        self.kb
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    /// Answers one question, evaluating candidates on `config.workers`
    /// threads.
    pub fn answer(&self, question: &str) -> Result<Trace, ModelError> {
        self.answer_with_workers(question, self.config.workers)
    }

    pub fn answer_with_workers(&self, question: &str, workers: usize) -> Result<Trace, ModelError> {
        let cfg = &self.config;
        let kb = self.kb;
        let relations = retrieve_relations(
            question,
            kb,
            self.models.scorer.as_ref(),
            cfg.k_relations,
            cfg.relation_prefilter,
        )?;
        let names = relations.names();
        let sketches = detect_mentions(question, &names, self.models.sketcher.as_ref(), kb, cfg.k_sketches)?;
        let mut candidates = retrieve_candidates(&sketches.mentions, kb, &names, cfg.k_pop, cfg.k_conn);
        rank_entities(question, &mut candidates, kb, self.models.scorer.as_ref())?;
        let selected = select_entities(&candidates, cfg.k_entities);
        let contexts = build_contexts(&names, &selected, kb);
        let prompt = build_prompt(question, &contexts.relations, &contexts.entities);
        let entities = selected.flattened();
        let request = GenerationRequest {
            question,
            prompt: &prompt,
            relations: &names,
            entities: &entities,
            kb,
        };
        let generation = generate_and_select(&request, self.models.generator.as_ref(), cfg.k_beam, workers)?;

        let mut final_answer = generation.chosen_candidate().map(|c| FinalAnswer {
            sexpr: c.text.clone(),
            answers: c.answer.clone().expect("executable candidates carry an answer"),
        });
        let mut fallback = None;
        if final_answer.is_none() && cfg.fallback_enabled {
            let top = selected.top1();
            let ranked = rank_candidates(question, enumerate_two_hop(&top, kb), self.models.scorer.as_ref(), kb)?;
            let chosen = fallback_answer(&ranked, kb);
            if let Some((i, answers)) = &chosen {
                final_answer = Some(FinalAnswer {
                    sexpr: ranked[*i].text.clone(),
                    answers: answers.clone(),
                });
            }
            fallback = Some(FallbackTrace {
                top_entities: top,
                candidates: ranked,
                chosen: chosen.map(|(i, _)| i),
            });
        }
        let used_fallback = fallback.is_some();
        Ok(Trace {
            trace_version: TRACE_VERSION,
            question: question.to_string(),
            relations,
            sketches,
            candidates,
            selected,
            contexts,
            prompt,
            generation,
            fallback,
            used_fallback,
            final_answer,
        })
    }
}
