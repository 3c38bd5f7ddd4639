use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::{
    word_tokens, normalize_alias, AliasEntry, ClassName, EntityId, Fact, KbError, KbStats,
    KnowledgeBase, LiteralKind, OntologyTriple, RelationName, Value,
};

/// Class used for both sides of ontology triples synthesized in lenient mode.
pub const FALLBACK_CLASS: &str = "common.topic";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnknownRelation,
    DuplicateOntology,
    DuplicateName,
    DuplicateAlias,
    LiteralRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.file, self.line) {
            (Some(file), Some(line)) => write!(f, "{file}:{line}: {}", self.message),
            (None, Some(line)) => write!(f, "row {line}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub stats: Option<KbStats>,
    pub violations: Vec<Violation>,
    /// Relations that received a synthesized ontology triple.
    pub synthesized_relations: Vec<RelationName>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub(super) struct Location {
    pub file: Option<String>,
    pub line: Option<usize>,
}

/// Accumulates rows and builds an indexed [`KnowledgeBase`].
#[derive(Debug, Default)]
pub struct KbBuilder {
    triples: Vec<(OntologyTriple, Location)>,
    facts: Vec<(Fact, Location)>,
    classes: Vec<(EntityId, ClassName)>,
    names: Vec<(EntityId, String, Location)>,
    aliases: Vec<(AliasEntry, Location)>,
}

impl KbBuilder {
    pub fn triple(&mut self, domain: &str, relation: &str, range: &str) -> &mut Self {
        self.triple_at(domain, relation, range, Location::default())
    }

    pub(super) fn triple_at(&mut self, domain: &str, relation: &str, range: &str, loc: Location) -> &mut Self {
        self.triples.push((
            OntologyTriple {
                domain: domain.into(),
                relation: relation.into(),
                range: range.into(),
            },
            loc,
        ));
        self
    }

    pub fn fact(&mut self, subject: &str, relation: &str, object: Value) -> &mut Self {
        self.fact_at(subject, relation, object, Location::default())
    }

    pub(super) fn fact_at(&mut self, subject: &str, relation: &str, object: Value, loc: Location) -> &mut Self {
        self.facts.push((
            Fact {
                subject: subject.into(),
                relation: relation.into(),
                object,
            },
            loc,
        ));
        self
    }

    pub fn class(&mut self, entity: &str, class: &str) -> &mut Self {
        self.classes.push((entity.into(), class.into()));
        self
    }

    pub fn name(&mut self, entity: &str, name: &str) -> &mut Self {
        self.name_at(entity, name, Location::default())
    }

    pub(super) fn name_at(&mut self, entity: &str, name: &str, loc: Location) -> &mut Self {
        self.names.push((entity.into(), name.trim().to_string(), loc));
        self
    }

    pub fn alias(&mut self, alias: &str, entity: &str, popularity: f64) -> &mut Self {
        self.alias_at(alias, entity, popularity, Location::default())
    }

    pub(super) fn alias_at(&mut self, alias: &str, entity: &str, popularity: f64, loc: Location) -> &mut Self {
        self.aliases.push((
            AliasEntry {
                alias: normalize_alias(alias),
                entity: entity.into(),
                popularity,
            },
            loc,
        ));
        self
    }

    pub fn build(self, mode: LoadMode) -> Result<KnowledgeBase, KbError> {
        let mut violations = Vec::new();
        let violation = |kind, loc: &Location, message: String| Violation {
            kind,
            file: loc.file.clone(),
            line: loc.line,
            message,
        };

        let mut ontology: HashMap<RelationName, OntologyTriple> = HashMap::new();
        for (triple, loc) in self.triples {
            if let Some(existing) = ontology.get(&triple.relation) {
                let msg = if *existing == triple {
                    format!("relation `{}` declared twice", triple.relation)
                } else {
                    format!(
                        "relation `{}` declared with a second typing ({} -> {})",
                        triple.relation, triple.domain, triple.range
                    )
                };
                violations.push(violation(ViolationKind::DuplicateOntology, &loc, msg));
                continue;
            }
            ontology.insert(triple.relation.clone(), triple);
        }

        let mut synthesized = Vec::new();
        let mut facts = Vec::with_capacity(self.facts.len());
        let mut seen_facts = BTreeSet::new();
        for (fact, loc) in self.facts {
            match ontology.get(&fact.relation) {
                None => {
                    violations.push(violation(
                        ViolationKind::UnknownRelation,
                        &loc,
                        format!("relation `{}` is not declared in the ontology", fact.relation),
                    ));
                    if mode == LoadMode::Strict {
                        continue;
                    }
                    synthesized.push(fact.relation.clone());
                    ontology.insert(
                        fact.relation.clone(),
                        OntologyTriple {
                            domain: FALLBACK_CLASS.into(),
                            relation: fact.relation.clone(),
                            range: FALLBACK_CLASS.into(),
                        },
                    );
                }
                Some(triple) => {
                    if let Some(msg) = range_mismatch(&triple.range, &fact.object) {
                        violations.push(violation(ViolationKind::LiteralRange, &loc, msg));
                    }
                }
            }
            if seen_facts.insert(fact.clone()) {
                facts.push(fact);
            }
        }

        let mut names = HashMap::new();
        for (entity, name, loc) in self.names {
            if names.contains_key(&entity) {
                violations.push(violation(
                    ViolationKind::DuplicateName,
                    &loc,
                    format!("entity `{entity}` has more than one name row"),
                ));
                continue;
            }
            names.insert(entity, name);
        }

        let mut aliases: HashMap<String, Vec<AliasEntry>> = HashMap::new();
        let mut alias_count = 0;
        for (entry, loc) in self.aliases {
            let bucket = aliases.entry(entry.alias.clone()).or_default();
            if bucket.iter().any(|e| e.entity == entry.entity) {
                violations.push(violation(
                    ViolationKind::DuplicateAlias,
                    &loc,
                    format!("alias `{}` listed twice for `{}`", entry.alias, entry.entity),
                ));
                continue;
            }
            alias_count += 1;
            bucket.push(entry);
        }
        for bucket in aliases.values_mut() {
            bucket.sort_by(|a, b| {
                b.popularity
                    .total_cmp(&a.popularity)
                    .then_with(|| a.entity.cmp(&b.entity))
            });
        }
        let mut alias_keys: HashMap<String, String> = HashMap::new();
        let mut max_alias_tokens = 0;
        for alias in aliases.keys() {
            let tokens = word_tokens(alias);
            if tokens.is_empty() {
                continue;
            }
            max_alias_tokens = max_alias_tokens.max(tokens.len());
            alias_keys
                .entry(tokens.join(" "))
                .and_modify(|a| {
                    if alias < a {
                        *a = alias.clone();
                    }
                })
                .or_insert_with(|| alias.clone());
        }

        if mode == LoadMode::Strict && !violations.is_empty() {
            return Err(KbError::Invalid(violations));
        }

        let mut entity_classes: HashMap<EntityId, BTreeSet<ClassName>> = HashMap::new();
        let mut class_members: HashMap<ClassName, BTreeSet<EntityId>> = HashMap::new();
        let mut known_classes = BTreeSet::new();
        for (entity, class) in self.classes {
            known_classes.insert(class.clone());
            class_members.entry(class.clone()).or_default().insert(entity.clone());
            entity_classes.entry(entity).or_default().insert(class);
        }
        for t in ontology.values() {
            known_classes.insert(t.domain.clone());
            known_classes.insert(t.range.clone());
        }

        let mut entities: BTreeSet<EntityId> = BTreeSet::new();
        let mut out_edges: super::EdgeMap<EntityId, Value> = HashMap::new();
        let mut in_edges: super::EdgeMap<Value, EntityId> = HashMap::new();
        let mut relation_pairs: HashMap<RelationName, Vec<(EntityId, Value)>> = HashMap::new();
        for f in &facts {
            entities.insert(f.subject.clone());
            if let Value::Entity(o) = &f.object {
                entities.insert(o.clone());
            }
            out_edges
                .entry(f.subject.clone())
                .or_default()
                .entry(f.relation.clone())
                .or_default()
                .insert(f.object.clone());
            in_edges
                .entry(f.object.clone())
                .or_default()
                .entry(f.relation.clone())
                .or_default()
                .insert(f.subject.clone());
            relation_pairs
                .entry(f.relation.clone())
                .or_default()
                .push((f.subject.clone(), f.object.clone()));
        }
        entities.extend(entity_classes.keys().cloned());
        entities.extend(names.keys().cloned());
        entities.extend(aliases.values().flatten().map(|a| a.entity.clone()));

        let mut relations: Vec<RelationName> = ontology.keys().cloned().collect();
        relations.sort();

        let mut kb = KnowledgeBase {
            facts,
            ontology,
            relations,
            entity_classes,
            class_members,
            known_classes,
            names,
            entities,
            aliases,
            alias_keys,
            max_alias_tokens,
            alias_count,
            out_edges,
            in_edges,
            relation_pairs,
            report: ValidationReport {
                stats: None,
                violations,
                synthesized_relations: synthesized,
            },
        };
        kb.report.stats = Some(kb.stats());
        Ok(kb)
    }
}

fn range_mismatch(range: &ClassName, object: &Value) -> Option<String> {
    let expected = LiteralKind::for_range_class(range.as_str());
    match (expected, object) {
        (None, Value::Entity(_)) => None,
        (Some(LiteralKind::Float), Value::Literal(l)) if l.kind() == LiteralKind::Integer => None,
        (Some(kind), Value::Literal(l)) if l.kind() == kind => None,
        (Some(kind), _) => Some(format!("range `{range}` expects a {kind} literal, found `{object}`")),
        (None, Value::Literal(l)) => Some(format!(
            "range `{range}` expects an entity, found {} literal `{l}`",
            l.kind()
        )),
    }
}
