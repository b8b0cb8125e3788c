//! Recursive-descent parser for the constraint language.
//!
//! ```text
//! expr     := conj ( OR conj )*
//! conj     := unary ( AND unary )*
//! unary    := NOT unary | atom
//! atom     := '(' expr ')'
//!           | DURING interval | BEFORE date | AFTER date
//!           | IN ident | HAS ident | IS ident
//!           | MULTI-LEVEL DELEGATION
//! interval := '[' date '-' date ']' | ident
//! date     := jj '/' mm '/' aa
//! ```
//!
//! Keywords are case-insensitive; identifiers are case-sensitive.

use std::collections::BTreeMap;

use super::ast::is_keyword;
use super::{Constraint, ConstraintError, Date, Interval};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dash,
    Word(String),
    Date(Date),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Dash => "'-'".into(),
            Tok::Word(w) => format!("'{w}'"),
            Tok::Date(d) => format!("date {d}"),
            Tok::End => "end of input".into(),
        }
    }
}

const ATOM_START: &[&str] = &[
    "'('",
    "DURING",
    "BEFORE",
    "AFTER",
    "IN",
    "HAS",
    "IS",
    "NOT",
    "MULTI-LEVEL",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ConstraintError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b'-' => Tok::Dash,
            b'0'..=b'9' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'/') {
                    i += 1;
                }
                let raw = &text[start..i];
                if raw.matches('/').count() != 2 {
                    return Err(ConstraintError::Syntax {
                        position: start,
                        expected: vec!["date jj/mm/aa".into()],
                        found: format!("'{raw}'"),
                    });
                }
                let date = raw
                    .parse::<Date>()
                    .map_err(|_| ConstraintError::InvalidDate { text: raw.into() })?;
                out.push((Tok::Date(date), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'-' | b'.')) {
                    i += 1;
                }
                out.push((Tok::Word(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ConstraintError::Syntax {
                    position: start,
                    expected: ATOM_START.iter().map(|s| s.to_string()).collect(),
                    found: format!("'{ch}'"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    intervals: Option<&'a BTreeMap<String, Interval>>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> ConstraintError {
        ConstraintError::Syntax {
            position: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<(), ConstraintError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn expr(&mut self) -> Result<Constraint, ConstraintError> {
        let mut lhs = self.conj()?;
        while self.at_keyword("OR") {
            self.bump();
            let rhs = self.conj()?;
            lhs = Constraint::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Constraint, ConstraintError> {
        let mut lhs = self.unary()?;
        while self.at_keyword("AND") {
            self.bump();
            let rhs = self.unary()?;
            lhs = Constraint::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Constraint, ConstraintError> {
        if self.at_keyword("NOT") {
            self.bump();
            return Ok(Constraint::negate(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Constraint, ConstraintError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let inner = self.expr()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(inner);
        }
        let Tok::Word(word) = self.peek().clone() else {
            return Err(self.error(ATOM_START));
        };
        let kw = word.to_ascii_uppercase();
        match kw.as_str() {
            "DURING" => {
                self.bump();
                Ok(Constraint::During(self.interval()?))
            }
            "BEFORE" => {
                self.bump();
                Ok(Constraint::Before(self.date()?))
            }
            "AFTER" => {
                self.bump();
                Ok(Constraint::After(self.date()?))
            }
            "IN" => {
                self.bump();
                Ok(Constraint::In(self.ident("location")?))
            }
            "HAS" => {
                self.bump();
                Ok(Constraint::Has(self.ident("attribute")?))
            }
            "IS" => {
                self.bump();
                Ok(Constraint::Is(self.ident("attribute")?))
            }
            "MULTI-LEVEL" => {
                self.bump();
                if self.at_keyword("DELEGATION") {
                    self.bump();
                    Ok(Constraint::MultiLevelDelegation)
                } else {
                    Err(self.error(&["DELEGATION"]))
                }
            }
            _ => Err(self.error(ATOM_START)),
        }
    }

    fn date(&mut self) -> Result<Date, ConstraintError> {
        match self.peek() {
            Tok::Date(d) => {
                let d = *d;
                self.bump();
                Ok(d)
            }
            _ => Err(self.error(&["date jj/mm/aa"])),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ConstraintError> {
        match self.peek() {
            Tok::Word(w) if !is_keyword(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn interval(&mut self) -> Result<Interval, ConstraintError> {
        match self.peek().clone() {
            Tok::LBracket => {
                self.bump();
                let begin = self.date()?;
                self.expect(Tok::Dash, "'-'")?;
                let end = self.date()?;
                self.expect(Tok::RBracket, "']'")?;
                Interval::new(begin, end)
            }
            Tok::Word(name) if !is_keyword(&name) => {
                let found = self.intervals.and_then(|table| table.get(&name)).copied();
                match found {
                    Some(iv) => {
                        self.bump();
                        Ok(iv)
                    }
                    None => Err(ConstraintError::UnknownInterval { name }),
                }
            }
            _ => Err(self.error(&["'['", "interval name"])),
        }
    }
}

/// Parses constraint text with no named intervals available.
pub fn parse_constraint(text: &str) -> Result<Constraint, ConstraintError> {
    parse_with_intervals(text, None)
}

/// Parses constraint text, resolving `DURING <name>` against `intervals`.
pub fn parse_constraint_with(
    text: &str,
    intervals: &BTreeMap<String, Interval>,
) -> Result<Constraint, ConstraintError> {
    parse_with_intervals(text, Some(intervals))
}

fn parse_with_intervals(
    text: &str,
    intervals: Option<&BTreeMap<String, Interval>>,
) -> Result<Constraint, ConstraintError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
        intervals,
    };
    let ast = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(&["AND", "OR", "end of input"]));
    }
    Ok(ast)
}
