//! Schema contexts and the generation prompt.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::kb::{ClassName, EntityId, KnowledgeBase, RelationName};
use crate::ser::SelectedEntities;

pub const INSTRUCTION: &str =
    "Please translate the following question into logical form using the provided relations and entities.";
pub const RELATION_HEADER: &str = "Candidate relations with their corresponding Domain [D], Name [N], Range [R]:";
pub const ENTITY_HEADER: &str = "Candidate entities with their corresponding id [ID], Name [N], Class [C]:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationContext {
    pub relation: RelationName,
    pub domain: ClassName,
    pub range: ClassName,
    pub rendered: String,
}

impl RelationContext {
    pub fn new(relation: RelationName, domain: ClassName, range: ClassName) -> RelationContext {
        let rendered = format!("[D] {domain} [N] {relation} [R] {range}");
        RelationContext {
            relation,
            domain,
            range,
            rendered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityContext {
    pub entity: EntityId,
    pub name: String,
    pub classes: Vec<ClassName>,
    pub rendered: String,
}

impl EntityContext {
    pub fn new(entity: EntityId, name: String, classes: Vec<ClassName>) -> EntityContext {
        let joined: Vec<&str> = classes.iter().map(ClassName::as_str).collect();
        let rendered = format!("[ID] {entity} [N] {name} [C] {}", joined.join(", "));
        EntityContext {
            entity,
            name,
            classes,
            rendered,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SchemaContexts {
    pub relations: Vec<RelationContext>,
    pub entities: Vec<EntityContext>,
    /// Domain and range classes of the retrieved relations.
    pub classes: BTreeSet<ClassName>,
}

/// Relation contexts in rank order; entity contexts mention by mention,
/// each listing the entity's classes that occur in the relation contexts.
/// Undeclared relations are skipped.
pub fn build_contexts(relations: &[RelationName], selected: &SelectedEntities, kb: &KnowledgeBase) -> SchemaContexts {
    let mut out = SchemaContexts::default();
    for r in relations {
        if let Ok((d, rg)) = kb.domain_range(r.as_str()) {
            out.classes.insert(d.clone());
            out.classes.insert(rg.clone());
            out.relations.push(RelationContext::new(r.clone(), d.clone(), rg.clone()));
        }
    }
    let mut seen = HashSet::new();
    for m in &selected.mentions {
        for e in &m.entities {
            if !seen.insert(e.clone()) {
                continue;
            }
            let name = kb
                .name_of(e.as_str())
                .filter(|n| !n.trim().is_empty())
                .unwrap_or(e.as_str())
                .to_string();
            let classes = kb
                .classes_of(e.as_str())
                .iter()
                .filter(|c| out.classes.contains(*c))
                .cloned()
                .collect();
            out.entities.push(EntityContext::new(e.clone(), name, classes));
        }
    }
    out
}

pub fn build_prompt(question: &str, relations: &[RelationContext], entities: &[EntityContext]) -> String {
    let rels: Vec<&str> = relations.iter().map(|r| r.rendered.as_str()).collect();
    let ents: Vec<&str> = entities.iter().map(|e| e.rendered.as_str()).collect();
    let lines = [
        INSTRUCTION.to_string(),
        String::new(),
        format!("Question: {question}"),
        String::new(),
        RELATION_HEADER.to_string(),
        String::new(),
        rels.join(";\n\n"),
        String::new(),
        ENTITY_HEADER.to_string(),
        String::new(),
        ents.join(";\n\n"),
    ];
    let mut prompt = lines.join("\n");
    prompt.push('\n');
    prompt
}
