//! S-expression logical forms: reading, printing, execution and masking.

mod ast;
mod eval;
mod parse;
mod sketch;

pub use ast::{CmpOp, Expr, LogicalForm, SetType};
pub use eval::{evaluate, AnswerItem, AnswerItemType, AnswerKind, AnswerSet, EvalError};
pub use parse::{parse, parse_expr, ParseError};
pub use sketch::{
    extract_mentions, mask_to_sketch, mask_with, Sketch, SketchError, CLASS_SLOT, LITERAL_SLOT, RELATION_SLOT,
};

/// Sorts the arguments of every AND by printed form, bottom-up.
pub fn canonicalize(lf: &LogicalForm) -> LogicalForm {
    LogicalForm::new(canonical_expr(lf.root())).expect("canonicalization preserves typing")
}

pub fn canonical_expr(e: &Expr) -> Expr {
    let c = |x: &Expr| Box::new(canonical_expr(x));
    match e {
        Expr::And(a, b) => {
            let (a, b) = (canonical_expr(a), canonical_expr(b));
            if b.to_string() < a.to_string() {
                Expr::and(b, a)
            } else {
                Expr::and(a, b)
            }
        }
        Expr::Count(a) => Expr::Count(c(a)),
        Expr::Reverse(a) => Expr::Reverse(c(a)),
        Expr::Join(a, b) => Expr::Join(c(a), c(b)),
        Expr::ArgMax(a, b) => Expr::ArgMax(c(a), c(b)),
        Expr::ArgMin(a, b) => Expr::ArgMin(c(a), c(b)),
        Expr::Compare(op, b, n) => Expr::Compare(*op, c(b), n.clone()),
        leaf => leaf.clone(),
    }
}
