//! Set-semantics execution of logical forms against a knowledge base.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{EntityId, KnowledgeBase, Literal, LiteralKind, Value};

use super::ast::{Expr, LogicalForm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("type error: {0}")]
    Type(String),
    #[error("answer mixes entities and literals")]
    MixedAnswer,
}

/// The denotation of a logical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AnswerSet {
    Entities(BTreeSet<EntityId>),
    Literals(BTreeSet<Literal>),
    Count(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerKind {
    Entities,
    Literals,
    Count,
}

impl AnswerSet {
    pub fn empty() -> AnswerSet {
        AnswerSet::Entities(BTreeSet::new())
    }

    pub fn kind(&self) -> AnswerKind {
        match self {
            AnswerSet::Entities(_) => AnswerKind::Entities,
            AnswerSet::Literals(_) => AnswerKind::Literals,
            AnswerSet::Count(_) => AnswerKind::Count,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnswerSet::Entities(s) => s.len(),
            AnswerSet::Literals(s) => s.len(),
            AnswerSet::Count(_) => 1,
        }
    }

    /// True for empty sets and for a count of zero.
    pub fn is_empty(&self) -> bool {
        match self {
            AnswerSet::Entities(s) => s.is_empty(),
            AnswerSet::Literals(s) => s.is_empty(),
            AnswerSet::Count(n) => *n == 0,
        }
    }

    /// Members as values; a count becomes a single integer literal.
    pub fn values(&self) -> BTreeSet<Value> {
        match self {
            AnswerSet::Entities(s) => s.iter().cloned().map(Value::Entity).collect(),
            AnswerSet::Literals(s) => s.iter().cloned().map(Value::Literal).collect(),
            AnswerSet::Count(n) => BTreeSet::from([Value::Literal(Literal::integer(*n as i64))]),
        }
    }

    pub fn items(&self) -> Vec<AnswerItem> {
        self.values().iter().map(AnswerItem::from).collect()
    }

    fn from_values(values: BTreeSet<Value>) -> Result<AnswerSet, EvalError> {
        if values.iter().all(|v| v.as_entity().is_some()) {
            Ok(AnswerSet::Entities(
                values.into_iter().filter_map(|v| v.as_entity().cloned()).collect(),
            ))
        } else if values.iter().all(|v| v.as_literal().is_some()) {
            Ok(AnswerSet::Literals(
                values.into_iter().filter_map(|v| v.as_literal().cloned()).collect(),
            ))
        } else {
            Err(EvalError::MixedAnswer)
        }
    }
}

impl Serialize for AnswerSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            kind: AnswerKind,
            values: Vec<AnswerItem>,
        }
        Repr {
            kind: self.kind(),
            values: self.items(),
        }
        .serialize(serializer)
    }
}

/// JSON form of one answer: `{"type":"entity","value":"m.x"}` or
/// `{"type":"literal","value":"1997","kind":"date"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerItem {
    #[serde(rename = "type")]
    pub item_type: AnswerItemType,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<LiteralKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerItemType {
    Entity,
    Literal,
}

impl From<&Value> for AnswerItem {
    fn from(v: &Value) -> Self {
        match v {
            Value::Entity(e) => AnswerItem {
                item_type: AnswerItemType::Entity,
                value: e.to_string(),
                kind: None,
            },
            Value::Literal(l) => AnswerItem {
                item_type: AnswerItemType::Literal,
                value: l.canonical_lexical(),
                kind: Some(l.kind()),
            },
        }
    }
}

impl AnswerItem {
    pub fn to_value(&self) -> Result<Value, crate::kb::LiteralError> {
        match self.item_type {
            AnswerItemType::Entity => Ok(Value::Entity(self.value.as_str().into())),
            AnswerItemType::Literal => {
                Literal::new(&self.value, self.kind.unwrap_or(LiteralKind::String)).map(Value::Literal)
            }
        }
    }
}

type Pairs = BTreeSet<(Value, Value)>;

pub fn evaluate(lf: &LogicalForm, kb: &KnowledgeBase) -> Result<AnswerSet, EvalError> {
    let ev = Evaluator { kb };
    match lf.root() {
        Expr::Count(u) => Ok(AnswerSet::Count(ev.unary(u)?.len() as u64)),
        root => AnswerSet::from_values(ev.unary(root)?),
    }
}

struct Evaluator<'a> {
    kb: &'a KnowledgeBase,
}

impl Evaluator<'_> {
    fn unary(&self, e: &Expr) -> Result<BTreeSet<Value>, EvalError> {
        match e {
            Expr::Entity(id) => Ok(BTreeSet::from([Value::Entity(id.clone())])),
            Expr::Literal(l) => Ok(BTreeSet::from([Value::Literal(l.clone())])),
            Expr::Class(c) => Ok(self
                .kb
                .members_of(c.as_str())
                .map(|m| m.iter().cloned().map(Value::Entity).collect())
                .unwrap_or_default()),
            Expr::And(a, b) => {
                let a = self.unary(a)?;
                let b = self.unary(b)?;
                Ok(a.intersection(&b).cloned().collect())
            }
            Expr::Join(b, u) => {
                let targets = self.unary(u)?;
                self.join_unary(b, &targets)
            }
            Expr::ArgMax(u, b) => self.arg_extreme(u, b, Ordering::Greater),
            Expr::ArgMin(u, b) => self.arg_extreme(u, b, Ordering::Less),
            Expr::Compare(op, b, n) => {
                let mut out = BTreeSet::new();
                for (x, v) in self.binary(b)? {
                    let lit = comparable(&v)?;
                    let ord = lit.compare(n).map_err(|e| EvalError::Type(e.to_string()))?;
                    if op.holds(ord) {
                        out.insert(x);
                    }
                }
                Ok(out)
            }
            Expr::Count(_) => Err(EvalError::Type("a count cannot be used as a set".into())),
            Expr::Relation(_) | Expr::Reverse(_) => Err(EvalError::Type("expected a unary set, found a binary set".into())),
        }
    }

    /// `{x | (x, y) in b, y in targets}` without materializing `b` when it is
    /// a plain or reversed relation.
    fn join_unary(&self, b: &Expr, targets: &BTreeSet<Value>) -> Result<BTreeSet<Value>, EvalError> {
        match b {
            Expr::Relation(r) => Ok(targets
                .iter()
                .filter_map(|y| self.kb.subjects(y, r.as_str()))
                .flatten()
                .cloned()
                .map(Value::Entity)
                .collect()),
            Expr::Reverse(inner) if matches!(**inner, Expr::Relation(_)) => {
                let Expr::Relation(r) = &**inner else { unreachable!() };
                Ok(targets
                    .iter()
                    .filter_map(|y| y.as_entity().and_then(|e| self.kb.objects(e, r.as_str())))
                    .flatten()
                    .cloned()
                    .collect())
            }
            _ => Ok(self
                .binary(b)?
                .into_iter()
                .filter(|(_, y)| targets.contains(y))
                .map(|(x, _)| x)
                .collect()),
        }
    }

    fn binary(&self, e: &Expr) -> Result<Pairs, EvalError> {
        match e {
            Expr::Relation(r) => Ok(self
                .kb
                .relation_pairs(r.as_str())
                .iter()
                .map(|(s, o)| (Value::Entity(s.clone()), o.clone()))
                .collect()),
            Expr::Reverse(b) => Ok(self.binary(b)?.into_iter().map(|(x, y)| (y, x)).collect()),
            Expr::Join(b1, b2) => {
                let left = self.binary(b1)?;
                let mut right: HashMap<Value, Vec<Value>> = HashMap::new();
                for (y, z) in self.binary(b2)? {
                    right.entry(y).or_default().push(z);
                }
                let mut out = Pairs::new();
                for (x, y) in left {
                    if let Some(zs) = right.get(&y) {
                        for z in zs {
                            out.insert((x.clone(), z.clone()));
                        }
                    }
                }
                Ok(out)
            }
            _ => Err(EvalError::Type("expected a binary set, found a unary set".into())),
        }
    }

    fn arg_extreme(&self, u: &Expr, b: &Expr, want: Ordering) -> Result<BTreeSet<Value>, EvalError> {
        let members = self.unary(u)?;
        let mut pairs: Vec<(Value, Value)> = Vec::new();
        match b {
            Expr::Relation(r) => {
                for x in &members {
                    if let Some(ys) = x.as_entity().and_then(|e| self.kb.objects(e, r.as_str())) {
                        pairs.extend(ys.iter().map(|y| (x.clone(), y.clone())));
                    }
                }
            }
            _ => pairs.extend(self.binary(b)?.into_iter().filter(|(x, _)| members.contains(x))),
        }
        let mut best: Option<&Literal> = None;
        for (_, y) in &pairs {
            let lit = comparable(y)?;
            best = match best {
                None => Some(lit),
                Some(cur) => {
                    let ord = lit.compare(cur).map_err(|e| EvalError::Type(e.to_string()))?;
                    if ord == want { Some(lit) } else { Some(cur) }
                }
            };
        }
        let Some(best) = best.cloned() else {
            return Ok(BTreeSet::new());
        };
        Ok(pairs
            .into_iter()
            .filter(|(_, y)| {
                y.as_literal()
                    .and_then(|l| l.compare(&best).ok())
                    .is_some_and(|o| o == Ordering::Equal)
            })
            .map(|(x, _)| x)
            .collect())
    }
}

fn comparable(v: &Value) -> Result<&Literal, EvalError> {
    match v {
        Value::Literal(l) if l.kind().is_comparable() => Ok(l),
        Value::Literal(l) => Err(EvalError::Type(format!("cannot order {} literal `{l}`", l.kind()))),
        Value::Entity(e) => Err(EvalError::Type(format!("cannot order entity `{e}`"))),
    }
}
