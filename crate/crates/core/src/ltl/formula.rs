//! LTL syntax, parser and negation normal form.
//!
//! Concrete syntax: `true`, `false`, propositions, `~`, `[]`, `<>`, `X`,
//! `U`, `R`, `/\`, `\/`, `->` and parentheses. Unary operators bind
//! tightest, then `U`/`R` (right-associative), then `/\`, `\/`, and `->`
//! (right-associative).

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::system::Prop;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Prop(Prop),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Always(Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn prop(name: &str) -> Formula {
        Formula::Prop(Prop::new(name).expect("nonempty proposition"))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Formula {
        Formula::Release(Box::new(a), Box::new(b))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn props(&self) -> BTreeSet<Prop> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<Prop>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Prop(p) => {
                out.insert(p.clone());
            }
            Formula::Not(a) | Formula::Next(a) | Formula::Always(a) | Formula::Eventually(a) => {
                a.collect_props(out)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    /// Number of temporal operators (`X`, `U`, `R`, `[]`, `<>`).
    pub fn temporal_operator_count(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => 0,
            Formula::Not(a) => a.temporal_operator_count(),
            Formula::Next(a) | Formula::Always(a) | Formula::Eventually(a) => 1 + a.temporal_operator_count(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.temporal_operator_count() + b.temporal_operator_count()
            }
            Formula::Until(a, b) | Formula::Release(a, b) => {
                1 + a.temporal_operator_count() + b.temporal_operator_count()
            }
        }
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => true,
            Formula::Not(a) => matches!(**a, Formula::Prop(_)),
            Formula::Implies(..) => false,
            Formula::Next(a) | Formula::Always(a) | Formula::Eventually(a) => a.is_nnf(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Release(a, b) => {
                a.is_nnf() && b.is_nnf()
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Not(a) => write!(f, "~ {a}"),
            Formula::Next(a) => write!(f, "X {a}"),
            Formula::Always(a) => write!(f, "[] {a}"),
            Formula::Eventually(a) => write!(f, "<> {a}"),
            Formula::And(a, b) => write!(f, "({a} /\\ {b})"),
            Formula::Or(a, b) => write!(f, "({a} \\/ {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

/// Pushes negations down to propositions and eliminates `->`. Temporal
/// operators `[]` and `<>` are kept (as duals of each other).
pub fn to_nnf(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        True | False | Prop(_) => f.clone(),
        Not(inner) => negate(inner),
        And(a, b) => Formula::and(to_nnf(a), to_nnf(b)),
        Or(a, b) => Formula::or(to_nnf(a), to_nnf(b)),
        Implies(a, b) => Formula::or(negate(a), to_nnf(b)),
        Next(a) => Formula::next(to_nnf(a)),
        Until(a, b) => Formula::until(to_nnf(a), to_nnf(b)),
        Release(a, b) => Formula::release(to_nnf(a), to_nnf(b)),
        Always(a) => Formula::always(to_nnf(a)),
        Eventually(a) => Formula::eventually(to_nnf(a)),
    }
}

/// NNF of `~f`.
fn negate(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        True => False,
        False => True,
        Prop(_) => Formula::not(f.clone()),
        Not(inner) => to_nnf(inner),
        And(a, b) => Formula::or(negate(a), negate(b)),
        Or(a, b) => Formula::and(negate(a), negate(b)),
        Implies(a, b) => Formula::and(to_nnf(a), negate(b)),
        Next(a) => Formula::next(negate(a)),
        Until(a, b) => Formula::release(negate(a), negate(b)),
        Release(a, b) => Formula::until(negate(a), negate(b)),
        Always(a) => Formula::eventually(negate(a)),
        Eventually(a) => Formula::always(negate(a)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {position}: {message}")]
pub struct FormulaParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Not,
    Always,
    Eventually,
    Next,
    Until,
    Release,
    And,
    Or,
    Implies,
    True,
    False,
    Ident(String),
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '?' | '\'' | '.')
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, FormulaParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: &str| FormulaParseError { position: pos, message: msg.to_string() };
    while i < chars.len() {
        let (pos, c) = chars[i];
        let peek = chars.get(i + 1).map(|&(_, c)| c);
        let two = |tok: Tok| (2usize, tok);
        let (len, tok) = match (c, peek) {
            (c, _) if c.is_whitespace() => {
                i += 1;
                continue;
            }
            ('(', _) => (1, Tok::LParen),
            (')', _) => (1, Tok::RParen),
            ('~', _) | ('!', _) => (1, Tok::Not),
            ('[', Some(']')) => two(Tok::Always),
            ('<', Some('>')) => two(Tok::Eventually),
            ('/', Some('\\')) => two(Tok::And),
            ('\\', Some('/')) => two(Tok::Or),
            ('-', Some('>')) => two(Tok::Implies),
            (c, _) if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                let mut word = String::new();
                while j < chars.len() {
                    let ch = chars[j].1;
                    let next = chars.get(j + 1).map(|&(_, c)| c);
                    if is_ident_char(ch) || (ch == '-' && next.is_some_and(|n| n.is_ascii_alphanumeric())) {
                        word.push(ch);
                        j += 1;
                    } else {
                        break;
                    }
                }
                let tok = match word.as_str() {
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "R" => Tok::Release,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word),
                };
                out.push((pos, tok));
                i = j;
                continue;
            }
            _ => return Err(err(pos, &format!("unexpected character `{c}`"))),
        };
        out.push((pos, tok));
        i += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, msg: &str) -> Result<T, FormulaParseError> {
        Err(FormulaParseError { position: self.offset(), message: msg.to_string() })
    }

    fn implication(&mut self) -> Result<Formula, FormulaParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaParseError> {
        let mut lhs = self.binary_temporal()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = Formula::and(lhs, self.binary_temporal()?);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Formula, FormulaParseError> {
        let lhs = self.unary()?;
        match self.peek() {
            Some(Tok::Until) => {
                self.pos += 1;
                Ok(Formula::until(lhs, self.binary_temporal()?))
            }
            Some(Tok::Release) => {
                self.pos += 1;
                Ok(Formula::release(lhs, self.binary_temporal()?))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<Formula, FormulaParseError> {
        let wrap: fn(Formula) -> Formula = match self.peek() {
            Some(Tok::Not) => Formula::not,
            Some(Tok::Always) => Formula::always,
            Some(Tok::Eventually) => Formula::eventually,
            Some(Tok::Next) => Formula::next,
            _ => return self.atom(),
        };
        self.pos += 1;
        Ok(wrap(self.unary()?))
    }

    fn atom(&mut self) -> Result<Formula, FormulaParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("unexpected end of formula");
        };
        match tok {
            Tok::True => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Tok::False => {
                self.pos += 1;
                Ok(Formula::False)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                Ok(Formula::prop(&name))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.implication()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.error("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => self.error("expected a proposition, constant or `(`"),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, FormulaParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let f = p.implication()?;
    if p.pos != p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = FormulaParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
