//! Answer-set and logical-form metrics.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::kb::{KnowledgeBase, Value};
use crate::sexpr::{canonicalize, evaluate, parse, ParseError};

/// Harmonic mean of precision and recall. Two empty sets score 1, one
/// empty set scores 0.
pub fn f1(pred: &BTreeSet<Value>, gold: &BTreeSet<Value>) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let common = pred.intersection(gold).count() as f64;
    if common == 0.0 {
        return 0.0;
    }
    let p = common / pred.len() as f64;
    let r = common / gold.len() as f64;
    2.0 * p * r / (p + r)
}

/// At least one predicted answer is correct.
pub fn hit(pred: &BTreeSet<Value>, gold: &BTreeSet<Value>) -> bool {
    pred.intersection(gold).next().is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactMatch {
    /// Canonical forms are identical.
    pub ast: bool,
    /// Both evaluate to the same answer set of the same kind.
    pub execution: bool,
}

impl ExactMatch {
    pub fn matched(self) -> bool {
        self.ast || self.execution
    }
}

/// Compares a predicted form with the gold form. An unparseable prediction
/// never matches; an unparseable gold form is an error.
pub fn exact_match(pred: &str, gold: &str, kb: &KnowledgeBase) -> Result<ExactMatch, ParseError> {
    let gold = parse(gold, kb)?;
    let Ok(pred) = parse(pred, kb) else {
        return Ok(ExactMatch {
            ast: false,
            execution: false,
        });
    };
    let ast = canonicalize(&pred) == canonicalize(&gold);
    let execution = match (evaluate(&pred, kb), evaluate(&gold, kb)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    Ok(ExactMatch { ast, execution })
}
