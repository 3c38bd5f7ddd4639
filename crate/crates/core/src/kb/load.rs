//! TSV loading.
//!
//! Five UTF-8 files, `#` starts a comment line:
//!
//! | file          | columns                                   |
//! |---------------|-------------------------------------------|
//! | facts.tsv     | subject, relation, object                 |
//! | ontology.tsv  | domain class, relation, range class       |
//! | classes.tsv   | entity id, class                          |
//! | names.tsv     | entity id, canonical name                 |
//! | aliases.tsv   | alias, entity id, popularity              |
//!
//! A fact object is a literal when it carries a `^^kind` suffix or is
//! double-quoted; otherwise it is an entity if it looks like one (`m.`/`g.`
//! prefix) or is mentioned in any other file, and a string literal if not.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::build::Location;
use super::{looks_like_entity_id, KbBuilder, KnowledgeBase, Literal, LoadMode, ValidationReport, Value, Violation};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{}", describe_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
}

fn describe_violations(v: &[Violation]) -> String {
    match v {
        [] => "invalid knowledge base".to_string(),
        [one] => one.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more violations)", rest.len()),
    }
}

#[derive(Debug, Clone)]
pub struct KbPaths {
    pub facts: PathBuf,
    pub ontology: PathBuf,
    pub classes: PathBuf,
    pub names: PathBuf,
    pub aliases: PathBuf,
}

impl KbPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> KbPaths {
        let dir = dir.as_ref();
        KbPaths {
            facts: dir.join("facts.tsv"),
            ontology: dir.join("ontology.tsv"),
            classes: dir.join("classes.tsv"),
            names: dir.join("names.tsv"),
            aliases: dir.join("aliases.tsv"),
        }
    }
}

struct Row {
    line: usize,
    cols: Vec<String>,
}

fn read_rows(path: &Path, columns: usize) -> Result<Vec<Row>, KbError> {
    let text = fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file = file_label(path);
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(str::to_string).collect();
        if cols.len() != columns {
            return Err(KbError::Malformed {
                file,
                line: i + 1,
                message: format!("expected {columns} tab-separated columns, found {}", cols.len()),
            });
        }
        if let Some(pos) = cols.iter().position(|c| c.trim().is_empty()) {
            return Err(KbError::Malformed {
                file,
                line: i + 1,
                message: format!("column {} is empty", pos + 1),
            });
        }
        rows.push(Row { line: i + 1, cols });
    }
    Ok(rows)
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn loc(path: &Path, line: usize) -> Location {
    Location {
        file: Some(file_label(path)),
        line: Some(line),
    }
}

pub fn load_kb(paths: &KbPaths, mode: LoadMode) -> Result<KnowledgeBase, KbError> {
    let ontology = read_rows(&paths.ontology, 3)?;
    let classes = read_rows(&paths.classes, 2)?;
    let names = read_rows(&paths.names, 2)?;
    let aliases = read_rows(&paths.aliases, 3)?;
    let facts = read_rows(&paths.facts, 3)?;

    let mut known: HashSet<&str> = HashSet::new();
    known.extend(classes.iter().map(|r| r.cols[0].trim()));
    known.extend(names.iter().map(|r| r.cols[0].trim()));
    known.extend(aliases.iter().map(|r| r.cols[1].trim()));
    known.extend(facts.iter().map(|r| r.cols[0].trim()));

    let mut b = KbBuilder::default();
    for r in &ontology {
        b.triple_at(r.cols[0].trim(), r.cols[1].trim(), r.cols[2].trim(), loc(&paths.ontology, r.line));
    }
    for r in &classes {
        b.class(r.cols[0].trim(), r.cols[1].trim());
    }
    for r in &names {
        b.name_at(r.cols[0].trim(), &r.cols[1], loc(&paths.names, r.line));
    }
    for r in &aliases {
        let popularity: f64 = r.cols[2].trim().parse().map_err(|_| KbError::Malformed {
            file: file_label(&paths.aliases),
            line: r.line,
            message: format!("popularity `{}` is not a number", r.cols[2]),
        })?;
        if !popularity.is_finite() || popularity < 0.0 {
            return Err(KbError::Malformed {
                file: file_label(&paths.aliases),
                line: r.line,
                message: format!("popularity must be finite and non-negative, got {popularity}"),
            });
        }
        b.alias_at(&r.cols[0], r.cols[1].trim(), popularity, loc(&paths.aliases, r.line));
    }
    for r in &facts {
        let object = parse_object(r.cols[2].trim(), &known).map_err(|message| KbError::Malformed {
            file: file_label(&paths.facts),
            line: r.line,
            message,
        })?;
        b.fact_at(r.cols[0].trim(), r.cols[1].trim(), object, loc(&paths.facts, r.line));
    }
    b.build(mode)
}

fn parse_object(text: &str, known: &HashSet<&str>) -> Result<Value, String> {
    if text.contains("^^") {
        let (lexical, kind) = text.rsplit_once("^^").expect("checked");
        let lexical = unquote(lexical).unwrap_or(lexical);
        let kind = kind.parse().map_err(|e: super::LiteralError| e.to_string())?;
        return Literal::new(lexical, kind).map(Value::Literal).map_err(|e| e.to_string());
    }
    if let Some(inner) = unquote(text) {
        return Ok(Value::Literal(Literal::string(inner)));
    }
    if looks_like_entity_id(text) || known.contains(text) {
        Ok(Value::Entity(text.into()))
    } else {
        Ok(Value::Literal(Literal::string(text)))
    }
}

fn unquote(s: &str) -> Option<&str> {
    s.strip_prefix('"').and_then(|s| s.strip_suffix('"'))
}

pub fn load_kb_dir(dir: impl AsRef<Path>, mode: LoadMode) -> Result<KnowledgeBase, KbError> {
    load_kb(&KbPaths::in_dir(dir), mode)
}

/// Loads leniently and returns every violation found. Unparseable rows are
/// still hard errors.
pub fn validate_kb_dir(dir: impl AsRef<Path>) -> Result<ValidationReport, KbError> {
    load_kb_dir(dir, LoadMode::Lenient).map(|kb| kb.report().clone())
}
