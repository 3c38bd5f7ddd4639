//! Masked logical forms: schema items become placeholders and entities are
//! shown by name, e.g. `(AND <class> (JOIN <relation> [ atomic units ]))`.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::kb::KnowledgeBase;

use super::ast::{Expr, LogicalForm};

pub const RELATION_SLOT: &str = "<relation>";
pub const CLASS_SLOT: &str = "<class>";
pub const LITERAL_SLOT: &str = "<literal>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SketchError {
    #[error("entity `{0}` has no name")]
    Unnamed(String),
    #[error("name `{name}` of entity `{entity}` cannot appear in a sketch")]
    BadName { entity: String, name: String },
    #[error("unbalanced bracket at position {0}")]
    UnbalancedBracket(usize),
    #[error("empty mention at position {0}")]
    EmptyMention(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sketch(String);

impl Sketch {
    pub fn new(text: impl Into<String>) -> Sketch {
        Sketch(text.into())
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Sketch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A name survives a sketch round trip only if it is non-empty, already
/// trimmed and bracket-free.
fn sketchable(name: &str) -> bool {
    !name.is_empty() && name.trim() == name && !name.contains(['[', ']'])
}

pub fn mask_to_sketch(lf: &LogicalForm, kb: &KnowledgeBase) -> Result<Sketch, SketchError> {
    mask_with(lf, |id| kb.name_of(id).map(str::to_string))
}

/// Masks with an arbitrary name lookup.
pub fn mask_with(lf: &LogicalForm, name_of: impl Fn(&str) -> Option<String>) -> Result<Sketch, SketchError> {
    let mut err = None;
    let mut out = String::new();
    lf.root().write_with(&mut out, &mut |leaf: &Expr, out: &mut String| match leaf {
        Expr::Relation(_) => out.push_str(RELATION_SLOT),
        Expr::Class(_) => out.push_str(CLASS_SLOT),
        Expr::Literal(_) => out.push_str(LITERAL_SLOT),
        Expr::Entity(id) => match name_of(id.as_str()) {
            Some(name) if sketchable(&name) => {
                out.push_str("[ ");
                out.push_str(&name);
                out.push_str(" ]");
            }
            Some(name) => {
                err.get_or_insert(SketchError::BadName {
                    entity: id.to_string(),
                    name,
                });
            }
            None => {
                err.get_or_insert(SketchError::Unnamed(id.to_string()));
            }
        },
        _ => unreachable!(),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(Sketch(out)),
    }
}

/// Bracketed spans in order, trimmed, deduplicated case-insensitively.
pub fn extract_mentions(sketch: &str) -> Result<Vec<String>, SketchError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut open: Option<usize> = None;
    for (i, c) in sketch.char_indices() {
        match (c, open) {
            ('[', None) => open = Some(i),
            ('[', Some(_)) => return Err(SketchError::UnbalancedBracket(i)),
            (']', None) => return Err(SketchError::UnbalancedBracket(i)),
            (']', Some(start)) => {
                let mention = sketch[start + 1..i].trim();
                if mention.is_empty() {
                    return Err(SketchError::EmptyMention(start));
                }
                if seen.insert(mention.to_lowercase()) {
                    out.push(mention.to_string());
                }
                open = None;
            }
            _ => {}
        }
    }
    match open {
        Some(start) => Err(SketchError::UnbalancedBracket(start)),
        None => Ok(out),
    }
}
