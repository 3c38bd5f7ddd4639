use std::fmt;

use crate::kb::{ClassName, EntityId, Literal, LiteralKind, RelationName};

use super::parse::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 4] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn keyword(self) -> &'static str {
        match self {
            CmpOp::Lt => "LT",
            CmpOp::Le => "LE",
            CmpOp::Gt => "GT",
            CmpOp::Ge => "GE",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

/// One node of an S-expression logical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    And(Box<Expr>, Box<Expr>),
    Count(Box<Expr>),
    Reverse(Box<Expr>),
    Join(Box<Expr>, Box<Expr>),
    ArgMax(Box<Expr>, Box<Expr>),
    ArgMin(Box<Expr>, Box<Expr>),
    Compare(CmpOp, Box<Expr>, Literal),
    Class(ClassName),
    Entity(EntityId),
    Literal(Literal),
    Relation(RelationName),
}

/// What an expression denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetType {
    /// A set of entities or literals.
    Unary,
    /// A set of pairs.
    Binary,
    /// A singleton count.
    Count,
}

impl fmt::Display for SetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetType::Unary => "a unary set",
            SetType::Binary => "a binary set",
            SetType::Count => "a count",
        })
    }
}

impl Expr {
    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }
    pub fn count(a: Expr) -> Expr {
        Expr::Count(Box::new(a))
    }
    pub fn reverse(a: Expr) -> Expr {
        Expr::Reverse(Box::new(a))
    }
    pub fn join(a: Expr, b: Expr) -> Expr {
        Expr::Join(Box::new(a), Box::new(b))
    }
    pub fn argmax(a: Expr, b: Expr) -> Expr {
        Expr::ArgMax(Box::new(a), Box::new(b))
    }
    pub fn argmin(a: Expr, b: Expr) -> Expr {
        Expr::ArgMin(Box::new(a), Box::new(b))
    }
    pub fn compare(op: CmpOp, b: Expr, n: Literal) -> Expr {
        Expr::Compare(op, Box::new(b), n)
    }
    pub fn entity(id: &str) -> Expr {
        Expr::Entity(id.into())
    }
    pub fn relation(name: &str) -> Expr {
        Expr::Relation(name.into())
    }
    pub fn class(name: &str) -> Expr {
        Expr::Class(name.into())
    }

    /// Type of the expression, or a message naming the first violation.
    pub fn type_of(&self) -> Result<SetType, String> {
        use SetType::*;
        let expect = |e: &Expr, want: SetType, op: &str, pos: &str| -> Result<(), String> {
            let got = e.type_of()?;
            if got == want {
                Ok(())
            } else {
                Err(format!("{op} expects {want} as its {pos} argument, found {got}"))
            }
        };
        match self {
            Expr::And(a, b) => {
                expect(a, Unary, "AND", "first")?;
                expect(b, Unary, "AND", "second")?;
                Ok(Unary)
            }
            Expr::Count(a) => {
                expect(a, Unary, "COUNT", "only")?;
                Ok(Count)
            }
            Expr::Reverse(a) => {
                expect(a, Binary, "R", "only")?;
                Ok(Binary)
            }
            Expr::Join(a, b) => {
                expect(a, Binary, "JOIN", "first")?;
                match b.type_of()? {
                    Unary => Ok(Unary),
                    Binary => Ok(Binary),
                    Count => Err("JOIN expects a unary or binary set as its second argument, found a count".into()),
                }
            }
            Expr::ArgMax(a, b) | Expr::ArgMin(a, b) => {
                let op = if matches!(self, Expr::ArgMax(..)) { "ARGMAX" } else { "ARGMIN" };
                expect(a, Unary, op, "first")?;
                expect(b, Binary, op, "second")?;
                Ok(Unary)
            }
            Expr::Compare(op, b, n) => {
                expect(b, Binary, op.keyword(), "first")?;
                if n.kind() == LiteralKind::String {
                    return Err(format!("{} expects a numeric or date value, found `{n}`", op.keyword()));
                }
                Ok(Unary)
            }
            Expr::Class(_) | Expr::Entity(_) | Expr::Literal(_) => Ok(Unary),
            Expr::Relation(_) => Ok(Binary),
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::And(a, b) | Expr::Join(a, b) | Expr::ArgMax(a, b) | Expr::ArgMin(a, b) => vec![a, b],
            Expr::Count(a) | Expr::Reverse(a) | Expr::Compare(_, a, _) => vec![a],
            _ => vec![],
        }
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Entity ids in left-to-right order, with repeats.
    pub fn entities(&self) -> Vec<&EntityId> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Entity(id) = e {
                out.push(id);
            }
        });
        out
    }

    pub fn relations(&self) -> Vec<&RelationName> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Relation(r) = e {
                out.push(r);
            }
        });
        out
    }

    pub fn classes(&self) -> Vec<&ClassName> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Class(c) = e {
                out.push(c);
            }
        });
        out
    }

    pub fn join_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |e| {
            if matches!(e, Expr::Join(..)) {
                n += 1;
            }
        });
        n
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Writes the expression with operators in canonical form, delegating
    /// every leaf to `leaf`.
    pub(crate) fn write_with(&self, out: &mut String, leaf: &mut dyn FnMut(&Expr, &mut String)) {
        let (head, args): (&str, Vec<&Expr>) = match self {
            Expr::And(a, b) => ("AND", vec![a, b]),
            Expr::Count(a) => ("COUNT", vec![a]),
            Expr::Reverse(a) => ("R", vec![a]),
            Expr::Join(a, b) => ("JOIN", vec![a, b]),
            Expr::ArgMax(a, b) => ("ARGMAX", vec![a, b]),
            Expr::ArgMin(a, b) => ("ARGMIN", vec![a, b]),
            Expr::Compare(op, b, n) => {
                out.push('(');
                out.push_str(op.keyword());
                out.push(' ');
                b.write_with(out, leaf);
                out.push(' ');
                leaf(&Expr::Literal(n.clone()), out);
                out.push(')');
                return;
            }
            _ => return leaf(self, out),
        };
        out.push('(');
        out.push_str(head);
        for a in args {
            out.push(' ');
            a.write_with(out, leaf);
        }
        out.push(')');
    }
}

/// Canonical token spelling of a literal inside an S-expression.
pub(crate) fn literal_token(l: &Literal) -> String {
    match l.kind() {
        LiteralKind::String => {
            let mut s = String::with_capacity(l.lexical().len() + 2);
            s.push('"');
            for c in l.lexical().chars() {
                if c == '"' || c == '\\' {
                    s.push('\\');
                }
                s.push(c);
            }
            s.push('"');
            s
        }
        LiteralKind::Integer | LiteralKind::Float => l.canonical_lexical(),
        LiteralKind::Date => l.to_typed_string(),
    }
}

pub(crate) fn canonical_leaf(e: &Expr, out: &mut String) {
    match e {
        Expr::Class(c) => out.push_str(c.as_str()),
        Expr::Entity(id) => out.push_str(id.as_str()),
        Expr::Relation(r) => out.push_str(r.as_str()),
        Expr::Literal(l) => out.push_str(&literal_token(l)),
        _ => unreachable!("leaf callback on interior node"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_with(&mut s, &mut canonical_leaf);
        f.write_str(&s)
    }
}

/// A well-typed logical form whose root denotes an answer (a unary set or
/// a count).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LogicalForm {
    root: Expr,
}

impl LogicalForm {
    pub fn new(root: Expr) -> Result<LogicalForm, ParseError> {
        match root.type_of() {
            Ok(SetType::Binary) => Err(ParseError::Type {
                message: "a logical form must denote a set of entities or a count, found a binary set".into(),
                position: 0,
            }),
            Ok(_) => Ok(LogicalForm { root }),
            Err(message) => Err(ParseError::Type { message, position: 0 }),
        }
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn into_root(self) -> Expr {
        self.root
    }

    pub fn is_count(&self) -> bool {
        matches!(self.root, Expr::Count(_))
    }
}

impl fmt::Display for LogicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
