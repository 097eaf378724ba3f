//! Recursive-descent parser for formulas and norm declarations.
//!
//! ```text
//! norm <id> weight <positive-decimal>: when <formula> then (obligate|permit|forbid) <action>
//! formula := implies
//! implies := or ("implies" implies)?
//! or      := and ("or" and)*
//! and     := unary ("and" unary)*
//! unary   := "not" unary | primary
//! primary := atom | "true" | "false" | "From(" id "," formula ")" | "(" formula ")"
//! ```
//!
//! Atoms may carry balanced parenthesised arguments, e.g. `has_water(C1)`.

use std::collections::BTreeSet;
use std::fmt;

use super::formula::Formula;
use super::{EthicaError, Modality, Norm};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    From,
    LParen,
    RParen,
    Comma,
    Colon,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::From => "`From(`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "not", "and", "or", "implies", "true", "false", "norm", "weight", "when", "then", "obligate", "permit",
    "forbid",
];

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str, line: usize) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, message: String| ParseError {
        line,
        column: col,
        message,
        expected: Vec::new(),
    };
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, column });
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '(' => {
                push(&mut out, Tok::LParen);
                i += 1;
            }
            ')' => {
                push(&mut out, Tok::RParen);
                i += 1;
            }
            ',' => {
                push(&mut out, Tok::Comma);
                i += 1;
            }
            ':' => {
                push(&mut out, Tok::Colon);
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                push(&mut out, Tok::Number(chars[start..i].iter().collect()));
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let base: String = chars[start..i].iter().collect();
                let next_is_paren = chars.get(i) == Some(&'(');
                if base == "From" && next_is_paren {
                    push(&mut out, Tok::From);
                    continue;
                }
                if KEYWORDS.contains(&base.as_str()) || !next_is_paren {
                    push(&mut out, Tok::Ident(base));
                    continue;
                }
                // atom arguments: balanced groups of identifier characters
                while chars.get(i) == Some(&'(') {
                    let mut depth = 0usize;
                    loop {
                        match chars.get(i) {
                            Some('(') => depth += 1,
                            Some(')') => depth -= 1,
                            Some(&ch) if is_ident_char(ch) => {}
                            _ => {
                                return Err(err(i + 1, "unbalanced parentheses in atom".into()));
                            }
                        }
                        i += 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                }
                push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(err(column, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned {
        tok: Tok::End,
        line,
        column: chars.len() + 1,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError {
            line: t.line,
            column: t.column,
            message: format!("unexpected {}", t.tok.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn formula(&mut self, in_standpoint: bool) -> Result<Formula, ParseError> {
        let lhs = self.or(in_standpoint)?;
        if self.at_keyword("implies") {
            self.bump();
            let rhs = self.formula(in_standpoint)?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self, in_standpoint: bool) -> Result<Formula, ParseError> {
        let mut lhs = self.and(in_standpoint)?;
        while self.at_keyword("or") {
            self.bump();
            lhs = Formula::or(lhs, self.and(in_standpoint)?);
        }
        Ok(lhs)
    }

    fn and(&mut self, in_standpoint: bool) -> Result<Formula, ParseError> {
        let mut lhs = self.unary(in_standpoint)?;
        while self.at_keyword("and") {
            self.bump();
            lhs = Formula::and(lhs, self.unary(in_standpoint)?);
        }
        Ok(lhs)
    }

    fn unary(&mut self, in_standpoint: bool) -> Result<Formula, ParseError> {
        if self.at_keyword("not") {
            self.bump();
            return Ok(Formula::not(self.unary(in_standpoint)?));
        }
        self.primary(in_standpoint)
    }

    fn primary(&mut self, in_standpoint: bool) -> Result<Formula, ParseError> {
        const EXPECTED: &[&str] = &["atom", "`not`", "`true`", "`false`", "`From(`", "`(`"];
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(ref s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(ref s) if s == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(ref s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Formula::Atom(s.clone()))
            }
            Tok::From => {
                if in_standpoint {
                    return Err(ParseError {
                        line: t.line,
                        column: t.column,
                        message: "nested standpoint: From(..) may not occur inside From(..)".into(),
                        expected: EXPECTED
                            .iter()
                            .filter(|e| **e != "`From(`")
                            .map(|s| s.to_string())
                            .collect(),
                    });
                }
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let id = self.name("stakeholder id")?;
                self.expect(Tok::Comma, "`,`")?;
                let body = self.formula(true)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Formula::from(id, body))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula(in_standpoint)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error(EXPECTED)),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.peek().tok == Tok::End {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }
}

/// Parses a single formula.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text, 1)?,
        pos: 0,
    };
    let f = p.formula(false)?;
    p.finish()?;
    Ok(f)
}

fn parse_norm_line(text: &str, line: usize) -> Result<Norm, ParseError> {
    let mut p = Parser {
        toks: lex(text, line)?,
        pos: 0,
    };
    p.expect_keyword("norm")?;
    let id = p.name("norm id")?;
    p.expect_keyword("weight")?;
    let weight_tok = p.peek().clone();
    let weight = match &weight_tok.tok {
        Tok::Number(n) => n.parse::<f64>().ok(),
        _ => None,
    };
    let weight = match weight {
        Some(w) if w > 0.0 && w.is_finite() => w,
        _ => {
            return Err(ParseError {
                line,
                column: weight_tok.column,
                message: "weight must be a positive decimal".into(),
                expected: vec!["positive decimal".into()],
            })
        }
    };
    p.bump();
    p.expect(Tok::Colon, "`:`")?;
    p.expect_keyword("when")?;
    let condition = p.formula(false)?;
    p.expect_keyword("then")?;
    let modality = match &p.peek().tok {
        Tok::Ident(s) if s == "obligate" => Modality::Obligation,
        Tok::Ident(s) if s == "permit" => Modality::Permission,
        Tok::Ident(s) if s == "forbid" => Modality::Prohibition,
        _ => return Err(p.error(&["`obligate`", "`permit`", "`forbid`"])),
    };
    p.bump();
    let action = p.name("action label")?;
    p.finish()?;
    Ok(Norm {
        id,
        condition,
        modality,
        action,
        weight,
    })
}

/// Parses a norm file: one declaration per line, `#` comments, blank lines ignored.
pub fn parse_norms(text: &str) -> Result<Vec<Norm>, EthicaError> {
    let mut norms: Vec<Norm> = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let norm = parse_norm_line(content, idx + 1)?;
        if !seen.insert(norm.id.clone()) {
            return Err(EthicaError::DuplicateNormId(norm.id));
        }
        norms.push(norm);
    }
    Ok(norms)
}

/// Like [`parse_norms`], also rejecting actions outside `actions`.
pub fn parse_norms_with_actions(text: &str, actions: &BTreeSet<String>) -> Result<Vec<Norm>, EthicaError> {
    let norms = parse_norms(text)?;
    if let Some(n) = norms.iter().find(|n| !actions.contains(&n.action)) {
        return Err(EthicaError::UnknownActionLabel {
            norm: n.id.clone(),
            action: n.action.clone(),
        });
    }
    Ok(norms)
}
