//! JSONL question sets.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::Value;
use crate::sexpr::AnswerItem;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Iid,
    Compositional,
    ZeroShot,
    #[default]
    Unknown,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Iid, Level::Compositional, Level::ZeroShot, Level::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Iid => "iid",
            Level::Compositional => "compositional",
            Level::ZeroShot => "zero-shot",
            Level::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub qid: String,
    pub question: String,
    #[serde(default)]
    pub s_expression: Option<String>,
    pub answers: Vec<AnswerItem>,
    #[serde(default)]
    pub level: Level,
}

impl DatasetRow {
    pub fn gold_values(&self) -> Result<BTreeSet<Value>, crate::kb::LiteralError> {
        self.answers.iter().map(AnswerItem::to_value).collect()
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRow>, DatasetError> {
    let mut rows = Vec::new();
    let mut qids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| DatasetError::Line { line: i + 1, message };
        let row: DatasetRow = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        row.gold_values().map_err(|e| err(e.to_string()))?;
        if !qids.insert(row.qid.clone()) {
            return Err(err(format!("duplicate qid `{}`", row.qid)));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetRow>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text)
}
