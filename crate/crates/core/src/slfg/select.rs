//! Executability filtering of generated candidates.

use serde::Serialize;

use crate::kb::KnowledgeBase;
use crate::par;
use crate::scoring::{GenerationRequest, Generator, ModelError};
use crate::sexpr::{evaluate, parse, AnswerSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateOutcome {
    pub text: String,
    pub score: f64,
    /// Parses, type-checks, evaluates and has a non-empty answer.
    pub executable: bool,
    pub answer: Option<AnswerSet>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GenerationResult {
    pub candidates: Vec<CandidateOutcome>,
    pub chosen: Option<usize>,
    pub used_fallback: bool,
}

impl GenerationResult {
    pub fn chosen_candidate(&self) -> Option<&CandidateOutcome> {
        self.chosen.map(|i| &self.candidates[i])
    }
}

/// Parses and runs one candidate text.
pub fn check_candidate(text: &str, score: f64, kb: &KnowledgeBase) -> CandidateOutcome {
    let result = parse(text, kb)
        .map_err(|e| e.to_string())
        .and_then(|lf| evaluate(&lf, kb).map_err(|e| e.to_string()));
    let (answer, error) = match result {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e)),
    };
    CandidateOutcome {
        text: text.to_string(),
        score,
        executable: answer.as_ref().is_some_and(|a| !a.is_empty()),
        answer,
        error,
    }
}

/// Asks the generator for `k_o` candidates and chooses the best-ranked
/// executable one. Candidates keep the generator's order.
pub fn generate_and_select(
    request: &GenerationRequest<'_>,
    generator: &dyn Generator,
    k_o: usize,
    workers: usize,
) -> Result<GenerationResult, ModelError> {
    let mut raw = generator.generate(request, k_o)?;
    raw.truncate(k_o);
    let candidates = par::map(&raw, workers, |c| check_candidate(&c.text, c.score, request.kb));
    let chosen = candidates.iter().position(|c| c.executable);
    Ok(GenerationResult {
        candidates,
        chosen,
        used_fallback: false,
    })
}
