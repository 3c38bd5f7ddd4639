//! Typed literal values.
//!
//! A literal carries the lexical form it was read with plus a parsed value.
//! Equality, ordering and hashing only look at the parsed value, so `"1.50"`
//! and `"1.5"` as floats are the same literal.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralKind {
    String,
    #[serde(rename = "int")]
    Integer,
    Float,
    Date,
}

impl LiteralKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LiteralKind::String => "string",
            LiteralKind::Integer => "int",
            LiteralKind::Float => "float",
            LiteralKind::Date => "date",
        }
    }

    pub fn is_comparable(self) -> bool {
        !matches!(self, LiteralKind::String)
    }

    /// Range classes that, by convention, hold literals of this kind.
    pub fn range_classes(self) -> &'static [&'static str] {
        match self {
            LiteralKind::String => &["type.text", "type.string"],
            LiteralKind::Integer => &["type.int", "type.integer"],
            LiteralKind::Float => &["type.float"],
            LiteralKind::Date => &["type.datetime", "type.date"],
        }
    }

    /// Inverse of [`LiteralKind::range_classes`].
    pub fn for_range_class(class: &str) -> Option<LiteralKind> {
        [
            LiteralKind::String,
            LiteralKind::Integer,
            LiteralKind::Float,
            LiteralKind::Date,
        ]
        .into_iter()
        .find(|k| k.range_classes().contains(&class))
    }
}

impl FromStr for LiteralKind {
    type Err = LiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "string" | "str" | "text" => Ok(LiteralKind::String),
            "int" | "integer" => Ok(LiteralKind::Integer),
            "float" | "double" => Ok(LiteralKind::Float),
            "date" | "datetime" => Ok(LiteralKind::Date),
            other => Err(LiteralError::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for LiteralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiteralError {
    #[error("unknown literal kind `{0}`")]
    UnknownKind(String),
    #[error("`{lexical}` is not a valid {kind} literal")]
    Invalid { lexical: String, kind: LiteralKind },
    #[error("cannot compare {0} literal with {1} literal")]
    Incomparable(LiteralKind, LiteralKind),
}

/// Calendar date with optional month and day (`1997`, `1997-06`, `1997-06-26`).
///
/// Ordering is year, then month, then day, with a missing component sorting
/// before any present one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date {
    pub year: i32,
    pub month: Option<u8>,
    pub day: Option<u8>,
}

impl Date {
    fn parse(s: &str) -> Option<Date> {
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let mut parts = body.split('-');
        let year_str = parts.next()?;
        if year_str.len() < 4 || !year_str.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut year: i32 = year_str.parse().ok()?;
        if negative {
            year = -year;
        }
        let month = match parts.next() {
            Some(m) => Some(two_digits(m).filter(|m| (1..=12).contains(m))?),
            None => None,
        };
        let day = match parts.next() {
            Some(d) => {
                let d = two_digits(d)?;
                let max = days_in_month(year, month?);
                if d == 0 || d > max {
                    return None;
                }
                Some(d)
            }
            None => None,
        };
        if parts.next().is_some() {
            return None;
        }
        Some(Date { year, month, day })
    }
}

fn two_digits(s: &str) -> Option<u8> {
    if s.len() != 2 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.year < 0 {
            write!(f, "-{:04}", -self.year)?;
        } else {
            write!(f, "{:04}", self.year)?;
        }
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Parsed {
    Str(String),
    Int(i64),
    Float(f64),
    Date(Date),
}

#[derive(Debug, Clone)]
pub struct Literal {
    lexical: String,
    value: Parsed,
}

impl Literal {
    pub fn new(lexical: &str, kind: LiteralKind) -> Result<Literal, LiteralError> {
        let invalid = || LiteralError::Invalid {
            lexical: lexical.to_string(),
            kind,
        };
        let value = match kind {
            LiteralKind::String => Parsed::Str(lexical.to_string()),
            LiteralKind::Integer => Parsed::Int(lexical.trim().parse().map_err(|_| invalid())?),
            LiteralKind::Float => {
                let v: f64 = lexical.trim().parse().map_err(|_| invalid())?;
                if !v.is_finite() {
                    return Err(invalid());
                }
                // -0.0 and 0.0 are one value
                Parsed::Float(if v == 0.0 { 0.0 } else { v })
            }
            LiteralKind::Date => Parsed::Date(Date::parse(lexical.trim()).ok_or_else(invalid)?),
        };
        Ok(Literal {
            lexical: lexical.to_string(),
            value,
        })
    }

    pub fn string(s: impl Into<String>) -> Literal {
        let s = s.into();
        Literal {
            value: Parsed::Str(s.clone()),
            lexical: s,
        }
    }

    pub fn integer(v: i64) -> Literal {
        Literal {
            lexical: v.to_string(),
            value: Parsed::Int(v),
        }
    }

    /// Panics on non-finite input.
    pub fn float(v: f64) -> Literal {
        assert!(v.is_finite(), "float literal must be finite");
        let v = if v == 0.0 { 0.0 } else { v };
        Literal {
            lexical: format_float(v),
            value: Parsed::Float(v),
        }
    }

    pub fn date(d: Date) -> Literal {
        Literal {
            lexical: d.to_string(),
            value: Parsed::Date(d),
        }
    }

    /// Parses the `lexical^^kind` notation used in data files. No suffix
    /// means a string literal.
    pub fn parse_typed(text: &str) -> Result<Literal, LiteralError> {
        match text.rsplit_once("^^") {
            Some((lexical, kind)) => Literal::new(lexical, kind.parse()?),
            None => Ok(Literal::string(text)),
        }
    }

    pub fn kind(&self) -> LiteralKind {
        match self.value {
            Parsed::Str(_) => LiteralKind::String,
            Parsed::Int(_) => LiteralKind::Integer,
            Parsed::Float(_) => LiteralKind::Float,
            Parsed::Date(_) => LiteralKind::Date,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self.value {
            Parsed::Int(v) => Some(v),
            _ => None,
        }
    }

    /// Canonical lexical form derived from the parsed value.
    pub fn canonical_lexical(&self) -> String {
        match &self.value {
            Parsed::Str(s) => s.clone(),
            Parsed::Int(v) => v.to_string(),
            Parsed::Float(v) => format_float(*v),
            Parsed::Date(d) => d.to_string(),
        }
    }

    /// `lexical^^kind`, or the bare lexical form for strings.
    pub fn to_typed_string(&self) -> String {
        match self.kind() {
            LiteralKind::String => self.canonical_lexical(),
            k => format!("{}^^{}", self.canonical_lexical(), k),
        }
    }

    /// Order between two comparable literals. Integers and floats compare
    /// numerically with each other; dates only with dates.
    pub fn compare(&self, other: &Literal) -> Result<Ordering, LiteralError> {
        use Parsed::*;
        match (&self.value, &other.value) {
            (Int(a), Int(b)) => Ok(a.cmp(b)),
            (Int(a), Float(b)) => Ok((*a as f64).total_cmp(b)),
            (Float(a), Int(b)) => Ok(a.total_cmp(&(*b as f64))),
            (Float(a), Float(b)) => Ok(a.total_cmp(b)),
            (Date(a), Date(b)) => Ok(a.cmp(b)),
            _ => Err(LiteralError::Incomparable(self.kind(), other.kind())),
        }
    }
}

fn format_float(v: f64) -> String {
    let s = format!("{v}");
    if s.contains(['.', 'e', 'E']) {
        s
    } else {
        format!("{s}.0")
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Literal {}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        use Parsed::*;
        match (&self.value, &other.value) {
            (Str(a), Str(b)) => a.cmp(b),
            (Int(a), Int(b)) => a.cmp(b),
            (Float(a), Float(b)) => a.total_cmp(b),
            (Date(a), Date(b)) => a.cmp(b),
            _ => self.kind().cmp(&other.kind()),
        }
    }
}

impl Hash for Literal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind().hash(state);
        match &self.value {
            Parsed::Str(s) => s.hash(state),
            Parsed::Int(v) => v.hash(state),
            Parsed::Float(v) => v.to_bits().hash(state),
            Parsed::Date(d) => d.hash(state),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_typed_string())
    }
}
