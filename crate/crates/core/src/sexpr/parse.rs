//! Reader for the textual S-expression format.
//!
//! Operators are matched case-insensitively. Bare tokens are classified by a
//! [`TokenResolver`]; tokens classified as literals are read as integers,
//! floats or strings in that order of preference. `lexical^^kind` forces a
//! literal kind, and double-quoted tokens are always literals.

use thiserror::Error;

use crate::kb::{Literal, LiteralKind, TokenClass, TokenResolver};

use super::ast::{CmpOp, Expr, LogicalForm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty logical form")]
    Empty,
    #[error("unbalanced parentheses at position {position}")]
    Unbalanced { position: usize },
    #[error("unterminated string starting at position {position}")]
    UnterminatedString { position: usize },
    #[error("unexpected input after the logical form at position {position}")]
    Trailing { position: usize },
    #[error("unknown function `{name}` at position {position}")]
    UnknownFunction { name: String, position: usize },
    #[error("{op} takes {expected} argument(s), found {found} at position {position}")]
    Arity {
        op: &'static str,
        expected: usize,
        found: usize,
        position: usize,
    },
    #[error("type error at position {position}: {message}")]
    Type { message: String, position: usize },
    #[error("bad literal `{token}` at position {position}: {message}")]
    BadLiteral {
        token: String,
        message: String,
        position: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open(usize),
    Close(usize),
    Atom(String, usize),
    Quoted(String, Option<String>, usize),
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                tokens.push(Token::Open(i));
                chars.next();
            }
            ')' => {
                tokens.push(Token::Close(i));
                chars.next();
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    match c {
                        '\\' => match chars.next() {
                            Some((_, esc)) => s.push(esc),
                            None => break,
                        },
                        '"' => {
                            closed = true;
                            break;
                        }
                        c => s.push(c),
                    }
                }
                if !closed {
                    return Err(ParseError::UnterminatedString { position: i });
                }
                let mut suffix = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    suffix.push(c);
                    chars.next();
                }
                let kind = if suffix.is_empty() {
                    None
                } else if let Some(k) = suffix.strip_prefix("^^") {
                    Some(k.to_string())
                } else {
                    return Err(ParseError::BadLiteral {
                        token: format!("\"{s}\"{suffix}"),
                        message: "unexpected text after closing quote".into(),
                        position: i,
                    });
                };
                tokens.push(Token::Quoted(s, kind, i));
            }
            _ => {
                let mut s = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                tokens.push(Token::Atom(s, i));
            }
        }
    }
    Ok(tokens)
}

#[derive(Debug)]
enum Sexp {
    List(Vec<Sexp>, usize),
    Atom(String, usize),
    Quoted(String, Option<String>, usize),
}

fn read_tree(tokens: &[Token]) -> Result<Sexp, ParseError> {
    let mut pos = 0;
    let tree = read_one(tokens, &mut pos)?;
    if let Some(t) = tokens.get(pos) {
        let position = match t {
            Token::Open(p) | Token::Close(p) | Token::Atom(_, p) | Token::Quoted(_, _, p) => *p,
        };
        return Err(match t {
            Token::Close(_) => ParseError::Unbalanced { position },
            _ => ParseError::Trailing { position },
        });
    }
    Ok(tree)
}

fn read_one(tokens: &[Token], pos: &mut usize) -> Result<Sexp, ParseError> {
    let Some(tok) = tokens.get(*pos) else {
        return Err(ParseError::Empty);
    };
    *pos += 1;
    match tok {
        Token::Atom(s, p) => Ok(Sexp::Atom(s.clone(), *p)),
        Token::Quoted(s, k, p) => Ok(Sexp::Quoted(s.clone(), k.clone(), *p)),
        Token::Close(p) => Err(ParseError::Unbalanced { position: *p }),
        Token::Open(start) => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(ParseError::Unbalanced { position: *start }),
                    Some(Token::Close(_)) => {
                        *pos += 1;
                        return Ok(Sexp::List(items, *start));
                    }
                    Some(_) => items.push(read_one(tokens, pos)?),
                }
            }
        }
    }
}

fn literal_from_atom(token: &str, position: usize) -> Result<Literal, ParseError> {
    let bad = |message: String| ParseError::BadLiteral {
        token: token.to_string(),
        message,
        position,
    };
    if let Some((lexical, kind)) = token.rsplit_once("^^") {
        let kind: LiteralKind = kind.parse().map_err(|e: crate::kb::LiteralError| bad(e.to_string()))?;
        return Literal::new(lexical, kind).map_err(|e| bad(e.to_string()));
    }
    if let Ok(v) = token.parse::<i64>() {
        return Ok(Literal::integer(v));
    }
    let numeric_shape = token
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        && token.chars().any(|c| c.is_ascii_digit());
    if numeric_shape {
        if let Ok(l) = Literal::new(token, LiteralKind::Float) {
            return Ok(l);
        }
    }
    Ok(Literal::string(token))
}

fn leaf(token: &str, position: usize, resolver: &dyn TokenResolver) -> Result<Expr, ParseError> {
    if token.contains("^^") {
        return literal_from_atom(token, position).map(Expr::Literal);
    }
    Ok(match resolver.classify(token) {
        TokenClass::Entity => Expr::Entity(token.into()),
        TokenClass::Relation => Expr::Relation(token.into()),
        TokenClass::Class => Expr::Class(token.into()),
        TokenClass::Literal => Expr::Literal(literal_from_atom(token, position)?),
    })
}

fn build(tree: &Sexp, resolver: &dyn TokenResolver) -> Result<Expr, ParseError> {
    match tree {
        Sexp::Atom(s, p) => leaf(s, *p, resolver),
        Sexp::Quoted(s, kind, p) => {
            let lit = match kind {
                None => Literal::string(s.clone()),
                Some(k) => {
                    let bad = |message: String| ParseError::BadLiteral {
                        token: format!("\"{s}\"^^{k}"),
                        message,
                        position: *p,
                    };
                    let kind: LiteralKind = k.parse().map_err(|e: crate::kb::LiteralError| bad(e.to_string()))?;
                    Literal::new(s, kind).map_err(|e| bad(e.to_string()))?
                }
            };
            Ok(Expr::Literal(lit))
        }
        Sexp::List(items, position) => {
            let position = *position;
            let (head, args) = match items.split_first() {
                Some((Sexp::Atom(h, _), rest)) => (h.to_ascii_uppercase(), rest),
                Some((other, _)) => {
                    let p = match other {
                        Sexp::List(_, p) | Sexp::Quoted(_, _, p) | Sexp::Atom(_, p) => *p,
                    };
                    return Err(ParseError::UnknownFunction {
                        name: "<non-symbol>".into(),
                        position: p,
                    });
                }
                None => {
                    return Err(ParseError::UnknownFunction {
                        name: "()".into(),
                        position,
                    })
                }
            };
            let (op, arity): (&'static str, usize) = match head.as_str() {
                "AND" => ("AND", 2),
                "COUNT" => ("COUNT", 1),
                "R" => ("R", 1),
                "JOIN" => ("JOIN", 2),
                "ARGMAX" => ("ARGMAX", 2),
                "ARGMIN" => ("ARGMIN", 2),
                "LT" => ("LT", 2),
                "LE" => ("LE", 2),
                "GT" => ("GT", 2),
                "GE" => ("GE", 2),
                _ => {
                    let Some(Sexp::Atom(name, p)) = items.first() else { unreachable!() };
                    return Err(ParseError::UnknownFunction {
                        name: name.clone(),
                        position: *p,
                    });
                }
            };
            if args.len() != arity {
                return Err(ParseError::Arity {
                    op,
                    expected: arity,
                    found: args.len(),
                    position,
                });
            }
            let mut sub = args.iter().map(|a| build(a, resolver));
            let mut next = || sub.next().expect("arity checked");
            let expr = match op {
                "AND" => Expr::and(next()?, next()?),
                "COUNT" => Expr::count(next()?),
                "R" => Expr::reverse(next()?),
                "JOIN" => Expr::join(next()?, next()?),
                "ARGMAX" => Expr::argmax(next()?, next()?),
                "ARGMIN" => Expr::argmin(next()?, next()?),
                cmp => {
                    let op = match cmp {
                        "LT" => CmpOp::Lt,
                        "LE" => CmpOp::Le,
                        "GT" => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    };
                    let b = next()?;
                    let Expr::Literal(n) = next()? else {
                        return Err(ParseError::Type {
                            message: format!("{cmp} expects a literal value as its second argument"),
                            position,
                        });
                    };
                    Expr::compare(op, b, n)
                }
            };
            expr.type_of().map_err(|message| ParseError::Type { message, position })?;
            Ok(expr)
        }
    }
}

/// Parses any well-typed expression, including bare relations.
pub fn parse_expr(text: &str, resolver: &dyn TokenResolver) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    build(&read_tree(&tokens)?, resolver)
}

/// Parses a logical form; the root must denote a unary set or a count.
pub fn parse(text: &str, resolver: &dyn TokenResolver) -> Result<LogicalForm, ParseError> {
    LogicalForm::new(parse_expr(text, resolver)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::SyntacticResolver;

    fn p(text: &str) -> Result<LogicalForm, ParseError> {
        parse(text, &SyntacticResolver)
    }

    #[test]
    fn rating_gold_parses() {
        let text = "(AND cvg.computer_game_rating (JOIN (R cvg.computer_game_rating_system.content_descriptors) m.042zlv3))";
        let lf = p(text).unwrap();
        let Expr::And(c, j) = lf.root() else { panic!() };
        assert_eq!(**c, Expr::class("cvg.computer_game_rating"));
        let Expr::Join(b, u) = &**j else { panic!() };
        assert!(matches!(**b, Expr::Reverse(_)));
        assert_eq!(**u, Expr::entity("m.042zlv3"));
        assert_eq!(lf.to_string(), text);
    }

    #[test]
    fn join_of_class_is_type_error() {
        let err = p("(COUNT (JOIN a.b m.e))").unwrap_err();
        assert!(matches!(err, ParseError::Type { position: 7, .. }), "{err}");
    }

    #[test]
    fn unbalanced_reports_position() {
        assert_eq!(p("(AND a").unwrap_err(), ParseError::Unbalanced { position: 0 });
        assert_eq!(p("(COUNT a.b))").unwrap_err(), ParseError::Unbalanced { position: 11 });
    }

    #[test]
    fn arity_and_unknown_function() {
        assert!(matches!(p("(AND a.b)"), Err(ParseError::Arity { op: "AND", found: 1, .. })));
        assert!(matches!(p("(FOO a.b)"), Err(ParseError::UnknownFunction { .. })));
        assert!(matches!(p(""), Err(ParseError::Empty)));
        assert!(matches!(p("(COUNT a.b) a.b"), Err(ParseError::Trailing { .. })));
    }

    #[test]
    fn literals_and_lowercase_ops() {
        let lf = p("(and a.b (lt x.y.z 10))").unwrap();
        assert_eq!(lf.to_string(), "(AND a.b (LT x.y.z 10))");
        let lf = p("(GE x.y.z 1997^^date)").unwrap();
        assert_eq!(lf.to_string(), "(GE x.y.z 1997^^date)");
        let lf = p("(JOIN x.y.z \"Strong \\\"lyrics\\\"\")").unwrap();
        assert_eq!(lf.to_string(), "(JOIN x.y.z \"Strong \\\"lyrics\\\"\")");
        assert!(p("(LT x.y.z \"abc\")").is_err());
        assert!(p("(LT x.y.z a.b)").is_err());
        assert_eq!(p("(LT x.y.z 2.50)").unwrap().to_string(), "(LT x.y.z 2.5)");
    }

    #[test]
    fn binary_root_rejected_but_parse_expr_allows_it() {
        assert!(p("(R x.y.z)").is_err());
        assert!(parse_expr("(R x.y.z)", &SyntacticResolver).is_ok());
    }
}
