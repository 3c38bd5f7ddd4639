//! Pluggable model contracts: a question/text scorer, a prompt-to-beam
//! generator and a sketch generator, each with a builtin implementation and
//! an external JSON client.

mod external;
mod lexical;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{EntityId, KnowledgeBase, RelationName};

pub use external::{Endpoint, ExternalConfig, ExternalModel};
pub use lexical::LexicalScorer;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("bad model endpoint `{0}`")]
    BadEndpoint(String),
    #[error("cannot reach model at {endpoint}: {cause}")]
    Unreachable { endpoint: String, cause: String },
    #[error("model at {endpoint} did not answer within {ms} ms")]
    Timeout { endpoint: String, ms: u128 },
    #[error("protocol violation from {endpoint}: {message}; payload: {payload}")]
    Protocol {
        endpoint: String,
        message: String,
        payload: String,
    },
}

impl ModelError {
    /// Transport failures may be retried; protocol violations may not.
    pub fn is_transient(&self) -> bool {
        matches!(self, ModelError::Unreachable { .. } | ModelError::Timeout { .. })
    }
}

/// Similarity between a question and a candidate text, in `[0, 1]`.
pub trait Scorer: Send + Sync {
    /// One score per candidate, in candidate order.
    fn score_batch(&self, question: &str, candidates: &[String]) -> Result<Vec<f64>, ModelError>;

    fn score(&self, question: &str, candidate: &str) -> Result<f64, ModelError> {
        Ok(self.score_batch(question, &[candidate.to_string()])?[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredText {
    pub text: String,
    pub score: f64,
}

/// Everything a generator may condition on. External generators only see
/// the prompt.
#[derive(Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub question: &'a str,
    pub prompt: &'a str,
    pub relations: &'a [RelationName],
    pub entities: &'a [EntityId],
    pub kb: &'a KnowledgeBase,
}

pub trait Generator: Send + Sync {
    /// At most `beam` candidates, best first.
    fn generate(&self, request: &GenerationRequest<'_>, beam: usize) -> Result<Vec<ScoredText>, ModelError>;
}

/// Input for sketch generation. `input` is the serialized
/// `question <relation> r1;r2;...` string.
#[derive(Clone, Copy)]
pub struct SketchRequest<'a> {
    pub question: &'a str,
    pub input: &'a str,
    pub relations: &'a [RelationName],
    pub kb: &'a KnowledgeBase,
}

pub trait SketchGenerator: Send + Sync {
    /// At most `beam` sketch texts, best first.
    fn sketch(&self, request: &SketchRequest<'_>, beam: usize) -> Result<Vec<String>, ModelError>;
}
