//! In-memory knowledge base: relational facts, the ontology, class
//! memberships, canonical names and the alias dictionary, plus the indexes
//! every later stage queries.
//!
//! A [`KnowledgeBase`] is immutable once built; build one with
//! [`KbBuilder`] or load one from TSV files with [`load_kb`].

mod build;
mod literal;
mod load;

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use build::{KbBuilder, LoadMode, FALLBACK_CLASS, ValidationReport, Violation, ViolationKind};
pub use literal::{Date, Literal, LiteralError, LiteralKind};
pub use load::{load_kb, load_kb_dir, validate_kb_dir, KbError, KbPaths};

macro_rules! name_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

name_type!(
    /// Opaque entity identifier such as `m.042zlv3`.
    EntityId
);
name_type!(
    /// Dotted relation name such as `book.literary_series.author`.
    RelationName
);
name_type!(ClassName);

/// An element of a fact's object position: an entity or a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Entity(EntityId),
    Literal(Literal),
}

impl Value {
    pub fn as_entity(&self) -> Option<&EntityId> {
        match self {
            Value::Entity(e) => Some(e),
            Value::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Value::Literal(l) => Some(l),
            Value::Entity(_) => None,
        }
    }
}

impl From<EntityId> for Value {
    fn from(e: EntityId) -> Self {
        Value::Entity(e)
    }
}

impl From<Literal> for Value {
    fn from(l: Literal) -> Self {
        Value::Literal(l)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Entity(e) => e.fmt(f),
            Value::Literal(l) => l.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub subject: EntityId,
    pub relation: RelationName,
    pub object: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyTriple {
    pub domain: ClassName,
    pub relation: RelationName,
    pub range: ClassName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliasEntry {
    pub alias: String,
    pub entity: EntityId,
    pub popularity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Subject to object.
    Out,
    /// Object to subject.
    In,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Out => Direction::In,
            Direction::In => Direction::Out,
        }
    }
}

/// How a bare S-expression token is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenClass {
    Entity,
    Relation,
    Class,
    Literal,
}

/// Resolves bare tokens of a logical form into KB element kinds.
pub trait TokenResolver {
    fn classify(&self, token: &str) -> TokenClass;
}

/// Token classification without a knowledge base: `m.`/`g.` prefixes are
/// entities, three or more dotted segments a relation, two a class.
#[derive(Debug, Default, Clone, Copy)]
pub struct SyntacticResolver;

impl TokenResolver for SyntacticResolver {
    fn classify(&self, token: &str) -> TokenClass {
        if looks_like_entity_id(token) {
            return TokenClass::Entity;
        }
        let segments = token.split('.').collect::<Vec<_>>();
        let wordy = segments
            .iter()
            .all(|s| !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_'))
            && segments.iter().any(|s| s.chars().any(|c| c.is_alphabetic()));
        match segments.len() {
            n if n >= 3 && wordy => TokenClass::Relation,
            2 if wordy => TokenClass::Class,
            _ => TokenClass::Literal,
        }
    }
}

pub(crate) fn looks_like_entity_id(token: &str) -> bool {
    ["m.", "g."]
        .iter()
        .any(|p| token.len() > 2 && token.starts_with(p))
}

/// Case-fold and collapse internal whitespace.
pub fn normalize_alias(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercased alphanumeric word tokens, used to match aliases against
/// question text regardless of punctuation.
pub fn word_tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

type EdgeMap<K, V> = HashMap<K, HashMap<RelationName, BTreeSet<V>>>;

#[derive(Debug)]
pub struct KnowledgeBase {
    facts: Vec<Fact>,
    ontology: HashMap<RelationName, OntologyTriple>,
    relations: Vec<RelationName>,
    entity_classes: HashMap<EntityId, BTreeSet<ClassName>>,
    class_members: HashMap<ClassName, BTreeSet<EntityId>>,
    known_classes: BTreeSet<ClassName>,
    names: HashMap<EntityId, String>,
    entities: BTreeSet<EntityId>,
    aliases: HashMap<String, Vec<AliasEntry>>,
    alias_keys: HashMap<String, String>,
    max_alias_tokens: usize,
    alias_count: usize,
    out_edges: EdgeMap<EntityId, Value>,
    in_edges: EdgeMap<Value, EntityId>,
    relation_pairs: HashMap<RelationName, Vec<(EntityId, Value)>>,
    report: ValidationReport,
}

static EMPTY_CLASSES: BTreeSet<ClassName> = BTreeSet::new();

impl KnowledgeBase {
    pub fn builder() -> KbBuilder {
        KbBuilder::default()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    /// All declared relations in name order.
    pub fn relations(&self) -> &[RelationName] {
        &self.relations
    }

    pub fn ontology_triple(&self, relation: &str) -> Option<&OntologyTriple> {
        self.ontology.get(relation)
    }

    pub fn has_relation(&self, relation: &str) -> bool {
        self.ontology.contains_key(relation)
    }

    pub fn domain_range(&self, relation: &str) -> Result<(&ClassName, &ClassName), KbError> {
        self.ontology
            .get(relation)
            .map(|t| (&t.domain, &t.range))
            .ok_or_else(|| KbError::UnknownRelation(relation.to_string()))
    }

    pub fn classes_of(&self, entity: &str) -> &BTreeSet<ClassName> {
        self.entity_classes.get(entity).unwrap_or(&EMPTY_CLASSES)
    }

    pub fn members_of(&self, class: &str) -> Option<&BTreeSet<EntityId>> {
        self.class_members.get(class)
    }

    /// Classes mentioned by any membership row or ontology triple.
    pub fn known_classes(&self) -> &BTreeSet<ClassName> {
        &self.known_classes
    }

    pub fn name_of(&self, entity: &str) -> Option<&str> {
        self.names.get(entity).map(String::as_str)
    }

    pub fn entities(&self) -> &BTreeSet<EntityId> {
        &self.entities
    }

    pub fn has_entity(&self, entity: &str) -> bool {
        self.entities.contains(entity)
    }

    /// Objects reached from `entity` along `relation` (`Out`), or subjects
    /// reaching it (`In`). Unknown entities and relations give an empty set.
    pub fn neighbors(&self, entity: &EntityId, relation: &str, direction: Direction) -> BTreeSet<Value> {
        self.neighbors_of_value(&Value::Entity(entity.clone()), relation, direction)
    }

    pub fn neighbors_of_value(&self, value: &Value, relation: &str, direction: Direction) -> BTreeSet<Value> {
        match direction {
            Direction::Out => value
                .as_entity()
                .and_then(|e| self.out_edges.get(e))
                .and_then(|m| m.get(relation))
                .cloned()
                .unwrap_or_default(),
            Direction::In => self
                .in_edges
                .get(value)
                .and_then(|m| m.get(relation))
                .map(|s| s.iter().cloned().map(Value::Entity).collect())
                .unwrap_or_default(),
        }
    }

    pub(crate) fn objects(&self, subject: &EntityId, relation: &str) -> Option<&BTreeSet<Value>> {
        self.out_edges.get(subject).and_then(|m| m.get(relation))
    }

    pub(crate) fn subjects(&self, object: &Value, relation: &str) -> Option<&BTreeSet<EntityId>> {
        self.in_edges.get(object).and_then(|m| m.get(relation))
    }

    /// Every `(subject, object)` pair of a relation, in fact order.
    pub fn relation_pairs(&self, relation: &str) -> &[(EntityId, Value)] {
        self.relation_pairs.get(relation).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Relations with at least one edge leaving `value` in `direction`.
    pub fn incident_relations(&self, value: &Value, direction: Direction) -> BTreeSet<&RelationName> {
        match direction {
            Direction::Out => value
                .as_entity()
                .and_then(|e| self.out_edges.get(e))
                .map(|m| m.keys().collect())
                .unwrap_or_default(),
            Direction::In => self
                .in_edges
                .get(value)
                .map(|m| m.keys().collect())
                .unwrap_or_default(),
        }
    }

    /// Incident relations in either direction, name-ascending.
    pub fn all_incident_relations(&self, entity: &EntityId) -> BTreeSet<&RelationName> {
        let v = Value::Entity(entity.clone());
        let mut all = self.incident_relations(&v, Direction::Out);
        all.extend(self.incident_relations(&v, Direction::In));
        all
    }

    pub fn connected_to_relations<S: Borrow<str>>(&self, entity: &EntityId, relations: &[S]) -> bool {
        let out = self.out_edges.get(entity);
        let inn = self.in_edges.get(&Value::Entity(entity.clone()));
        relations.iter().any(|r| {
            let r = r.borrow();
            out.is_some_and(|m| m.contains_key(r)) || inn.is_some_and(|m| m.contains_key(r))
        })
    }

    /// Entities under an alias, popularity descending then id ascending.
    /// The alias is normalized before lookup.
    pub fn entities_by_alias(&self, alias: &str) -> &[AliasEntry] {
        self.aliases
            .get(&normalize_alias(alias))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// The dictionary alias whose word tokens equal `tokens`, if any.
    pub fn alias_for_tokens(&self, tokens: &[String]) -> Option<&str> {
        self.alias_keys.get(&tokens.join(" ")).map(String::as_str)
    }

    /// Longest alias length in word tokens.
    pub fn max_alias_tokens(&self) -> usize {
        self.max_alias_tokens
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn stats(&self) -> KbStats {
        KbStats {
            entities: self.entities.len(),
            relations: self.relations.len(),
            classes: self.known_classes.len(),
            facts: self.facts.len(),
            aliases: self.alias_count,
        }
    }
}

impl TokenResolver for KnowledgeBase {
    fn classify(&self, token: &str) -> TokenClass {
        if looks_like_entity_id(token) || self.names.contains_key(token) || self.entities.contains(token) {
            TokenClass::Entity
        } else if self.ontology.contains_key(token) {
            TokenClass::Relation
        } else if self.known_classes.contains(token) {
            TokenClass::Class
        } else {
            TokenClass::Literal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbStats {
    pub entities: usize,
    pub relations: usize,
    pub classes: usize,
    pub facts: usize,
    pub aliases: usize,
}
