//! Logical form generation from schema contexts.

mod context;
mod enumerate;
mod schema;
mod select;

pub use context::{
    build_contexts, build_prompt, EntityContext, RelationContext, SchemaContexts, ENTITY_HEADER, INSTRUCTION,
    RELATION_HEADER,
};
pub use enumerate::{enumerate_forms, enumerate_schema_candidates, verbalize, EnumerativeGenerator, RELATION_BONUS};
pub use schema::{possible_classes, schema_valid};
pub use select::{check_candidate, generate_and_select, CandidateOutcome, GenerationResult};
