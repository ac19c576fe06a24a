//! Prefix s-expression syntax for general formulas: `(and (or A B) (not C))`.
//!
//! Variable names are single tokens; ids are assigned in order of first appearance.
//! `;` starts a comment that runs to the end of the line.

use std::collections::HashMap;

use thiserror::Error;

use super::{Expr, Formula, FormulaError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SexprError {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unexpected '{token}' at offset {offset}")]
    Unexpected { token: String, offset: usize },
    #[error("unknown connective '{name}' at offset {offset}")]
    UnknownConnective { name: String, offset: usize },
    #[error("'not' takes exactly one operand (offset {offset})")]
    NotArity { offset: usize },
    #[error("trailing input at offset {offset}")]
    Trailing { offset: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Debug, Clone)]
pub struct ParsedFormula {
    pub formula: Formula,
    /// `names[id]` is the source name of variable `id`.
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(Token<'_>, usize)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((Token::Open, i));
                i += 1;
            }
            b')' => {
                out.push((Token::Close, i));
                i += 1;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b';')
                {
                    i += 1;
                }
                out.push((Token::Atom(&text[start..i]), start));
            }
        }
    }
    out
}

struct Parser<'a> {
    tokens: Vec<(Token<'a>, usize)>,
    pos: usize,
    ids: HashMap<&'a str, usize>,
    names: Vec<String>,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<(Token<'a>, usize), SexprError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(SexprError::UnexpectedEof)?;
        self.pos += 1;
        Ok(t)
    }

    fn peek_close(&self) -> bool {
        matches!(self.tokens.get(self.pos), Some((Token::Close, _)))
    }

    fn expr(&mut self) -> Result<Expr, SexprError> {
        match self.next()? {
            (Token::Atom(name), _) => {
                let next_id = self.ids.len();
                let id = *self.ids.entry(name).or_insert(next_id);
                if id == self.names.len() {
                    self.names.push(name.to_string());
                }
                Ok(Expr::Var(id))
            }
            (Token::Close, offset) => Err(SexprError::Unexpected { token: ")".into(), offset }),
            (Token::Open, _) => {
                let (head, offset) = match self.next()? {
                    (Token::Atom(h), o) => (h, o),
                    (Token::Open, o) => return Err(SexprError::Unexpected { token: "(".into(), offset: o }),
                    (Token::Close, o) => return Err(SexprError::Unexpected { token: ")".into(), offset: o }),
                };
                let mut operands = Vec::new();
                while !self.peek_close() {
                    operands.push(self.expr()?);
                }
                self.next()?;
                match head.to_ascii_lowercase().as_str() {
                    "and" => Ok(Expr::And(operands)),
                    "or" => Ok(Expr::Or(operands)),
                    "not" => {
                        if operands.len() != 1 {
                            return Err(SexprError::NotArity { offset });
                        }
                        Ok(Expr::Not(Box::new(operands.pop().expect("one operand"))))
                    }
                    _ => Err(SexprError::UnknownConnective { name: head.to_string(), offset }),
                }
            }
        }
    }
}

pub fn parse_formula(text: &str) -> Result<ParsedFormula, SexprError> {
    let mut p = Parser { tokens: tokenize(text), pos: 0, ids: HashMap::new(), names: Vec::new() };
    let expr = p.expr()?;
    if let Some((_, offset)) = p.tokens.get(p.pos) {
        return Err(SexprError::Trailing { offset: *offset });
    }
    let formula = Formula::with_num_vars(&expr, p.names.len())?;
    Ok(ParsedFormula { formula, names: p.names })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{and, not, or, var};

    #[test]
    fn parses_nested() {
        let parsed = parse_formula("(and (or A B) (not C)) ; figure one").unwrap();
        assert_eq!(parsed.names, ["A", "B", "C"]);
        let f = &parsed.formula;
        assert_eq!(f.to_expr(f.root()), and([or([var(0), var(1)]), not(var(2))]));
    }

    #[test]
    fn repeated_names_share_ids() {
        let parsed = parse_formula("(AND b (OR a b))").unwrap();
        assert_eq!(parsed.names, ["b", "a"]);
        assert_eq!(parsed.formula.num_vars(), 2);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_formula("(and A").unwrap_err(), SexprError::UnexpectedEof);
        assert!(matches!(parse_formula("(xor A B)"), Err(SexprError::UnknownConnective { .. })));
        assert!(matches!(parse_formula("(not A B)"), Err(SexprError::NotArity { .. })));
        assert!(matches!(parse_formula("A B"), Err(SexprError::Trailing { offset: 2 })));
        assert!(matches!(parse_formula("(or)"), Err(SexprError::Formula(FormulaError::EmptyConnective))));
        assert!(matches!(parse_formula(")"), Err(SexprError::Unexpected { .. })));
    }
}
