use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{Expr, Node, Rational, Symbol, SymbolKind};

/// Declared symbols available to the parser. `exp` is reserved.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: BTreeMap<String, Symbol>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a symbol. Redeclaring a name with a different kind is an error.
    pub fn declare(&mut self, name: &str, kind: SymbolKind) -> Result<Symbol, ParseError> {
        if name == "exp" || !is_identifier(name) {
            return Err(ParseError::new(ParseErrorKind::InvalidName(name.to_string()), 0));
        }
        if let Some(existing) = self.symbols.get(name) {
            if existing.kind() != kind {
                return Err(ParseError::new(ParseErrorKind::KindClash(name.to_string()), 0));
            }
            return Ok(existing.clone());
        }
        let s = Symbol::new(name, kind);
        self.symbols.insert(name.to_string(), s.clone());
        Ok(s)
    }

    /// Builder form of [`declare`](Self::declare) for coordinates; panics on invalid names.
    pub fn with_coordinates<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        for n in names {
            self.declare(n, SymbolKind::Coordinate).expect("invalid coordinate name");
        }
        self
    }

    pub fn with_parameters<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        for n in names {
            self.declare(n, SymbolKind::Parameter).expect("invalid parameter name");
        }
        self
    }

    pub fn get(&self, name: &str) -> Option<Symbol> {
        self.symbols.get(name).cloned()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ParseError> {
        parse_expr(text, self)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected {found}, expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("zero denominator in rational literal")]
    ZeroDenominator,
    #[error("exponent out of range")]
    ExponentRange,
    #[error("`{0}` is not a valid symbol name")]
    InvalidName(String),
    #[error("`{0}` already declared with a different kind")]
    KindClash(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the input.
    pub position: usize,
}

impl ParseError {
    fn new(kind: ParseErrorKind, position: usize) -> Self {
        Self { kind, position }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("integer `{n}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((Tok::Int(text[start..i].parse().unwrap()), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return Err(ParseError::new(ParseErrorKind::UnexpectedChar(ch), i));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// Parses `text` against the grammar
///
/// ```text
/// expr     := term (('+'|'-') term)*
/// term     := factor (('*'|'/') factor)*
/// factor   := atom ['^' integer]
/// atom     := rational | symbol | 'exp' '(' expr ')' | '(' expr ')' | '-' atom
/// rational := integer ['/' positive-integer]
/// ```
///
/// The tree mirrors the text: no constants are folded except that a unary
/// minus directly on a numeric literal yields a negative constant. `a/b`
/// with both sides integer literals is read as one rational constant unless
/// the denominator is raised to a power. Note that `-x^2` means `(-x)^2`.
pub fn parse_expr(text: &str, table: &SymbolTable) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, table };
    let e = p.expr()?;
    p.expect(Tok::End, "operator or end of input")?;
    Ok(e)
}

fn close_product(first: Expr, rest: &mut Vec<Expr>) -> Expr {
    if rest.is_empty() {
        return first;
    }
    let mut factors = Vec::with_capacity(rest.len() + 1);
    factors.push(first);
    factors.append(rest);
    Expr::from_node(Node::Product(factors))
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    table: &'a SymbolTable,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError::new(
            ParseErrorKind::Unexpected {
                found: describe(self.peek()),
                expected,
            },
            self.offset(),
        )
    }

    fn expect(&mut self, t: Tok, expected: &'static str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let first = self.term()?;
        let mut terms = vec![first];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    let t = self.term()?;
                    terms.push(Expr::from_node(Node::Neg(t)));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::from_node(Node::Sum(terms))
        })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        // Consecutive `*` factors accumulate into one product node.
        let mut pending: Vec<Expr> = Vec::new();
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    pending.push(self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    acc = close_product(acc, &mut pending);
                    let d = self.factor()?;
                    acc = Expr::from_node(Node::Quotient(acc, d));
                }
                _ => break,
            }
        }
        Ok(close_product(acc, &mut pending))
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let (base, _) = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let Tok::Int(n) = self.peek().clone() else {
            return Err(self.unexpected("integer exponent"));
        };
        self.bump();
        let n = if negative { -n } else { n };
        let k = i32::try_from(n).map_err(|_| ParseError::new(ParseErrorKind::ExponentRange, at))?;
        Ok(Expr::from_node(Node::Pow(base, k)))
    }

    /// Returns the atom and whether it came straight from a numeric literal.
    fn atom(&mut self) -> Result<(Expr, bool), ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if *self.peek() == Tok::Slash && !matches!(self.peek_at(2), Tok::Caret) {
                    if let Tok::Int(d) = self.peek_at(1).clone() {
                        self.bump();
                        let d_at = self.offset();
                        self.bump();
                        if d.is_zero() {
                            return Err(ParseError::new(ParseErrorKind::ZeroDenominator, d_at));
                        }
                        return Ok((Expr::constant(Rational::new(n, d)), true));
                    }
                }
                Ok((Expr::constant(Rational::from_integer(n)), true))
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "exp" {
                    self.expect(Tok::LParen, "`(` after exp")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok((Expr::from_node(Node::Exp(arg)), false));
                }
                match self.table.get(&name) {
                    Some(s) => Ok((Expr::symbol(&s), false)),
                    None => Err(ParseError::new(ParseErrorKind::UnknownSymbol(name), at)),
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok((e, false))
            }
            Tok::Minus => {
                self.bump();
                let (inner, literal) = self.atom()?;
                if literal {
                    if let Node::Const(c) = inner.node() {
                        return Ok((Expr::constant(-c), true));
                    }
                }
                Ok((Expr::from_node(Node::Neg(inner)), false))
            }
            _ => Err(self.unexpected("number, symbol, `exp`, `(` or `-`")),
        }
    }
}
