use num_traits::{ToPrimitive, Zero};

use super::{parse_rational, Expr};
use crate::error::{Error, Result};

/// Variable naming scheme used by the parser and the renderer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarNames {
    names: Vec<String>,
}

impl VarNames {
    /// `x1..xn`.
    pub fn default_for(n: usize) -> Self {
        VarNames { names: (1..=n).map(|i| format!("x{i}")).collect() }
    }

    /// `x1..xn` followed by the time variable `t`.
    pub fn with_time(n: usize) -> Self {
        let mut v = VarNames::default_for(n);
        v.names.push("t".into());
        v
    }

    /// Two slots for group laws: `x1..xn[, t]` then `y1..yn[, s]`.
    pub fn pair(n: usize, time: bool) -> Self {
        let mut v = if time { VarNames::with_time(n) } else { VarNames::default_for(n) };
        v.names.extend((1..=n).map(|i| format!("y{i}")));
        if time {
            v.names.push("s".into());
        }
        v
    }

    pub fn custom(names: Vec<String>) -> Self {
        VarNames { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> String {
        self.names.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1))
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Parses `text` over the variables `x1..x<dim>`.
pub fn parse(text: &str, dim: usize) -> Result<Expr> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    parse_with(text, &VarNames::default_for(dim))
}

/// Parses `text` with an explicit variable table.
pub fn parse_with(text: &str, names: &VarNames) -> Result<Expr> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0, names, exact_decimals: false, len: text.len() };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(Error::Parse { pos: t.pos, msg: format!("unexpected {:?}", t.kind) });
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tok,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let s = &text[start..i];
            if s.matches('.').count() > 1 || s == "." {
                return Err(Error::Parse { pos: start, msg: format!("malformed number `{s}`") });
            }
            out.push(Token { kind: Tok::Num(s.to_string()), pos: start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { kind: Tok::Ident(text[start..i].to_string()), pos: start });
        } else if "+-*/^".contains(c) {
            out.push(Token { kind: Tok::Op(c), pos: i });
            i += 1;
        } else if c == '(' {
            out.push(Token { kind: Tok::LParen, pos: i });
            i += 1;
        } else if c == ')' {
            out.push(Token { kind: Tok::RParen, pos: i });
            i += 1;
        } else {
            return Err(Error::Parse { pos: i, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a VarNames,
    exact_decimals: bool,
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.len, |t| t.pos)
    }

    fn eat_op(&mut self, ops: &str) -> Option<char> {
        match self.peek() {
            Some(Token { kind: Tok::Op(c), .. }) if ops.contains(*c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Token { kind: Tok::RParen, .. }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::Parse { pos: self.here(), msg: "expected `)`".into() }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        while let Some(op) = self.eat_op("+-") {
            let t = self.term()?;
            terms.push(if op == '-' { -t } else { t });
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        while let Some(op) = self.eat_op("*/") {
            let rhs = self.unary()?;
            acc = if op == '*' {
                match acc {
                    Expr::Mul(mut v) => {
                        v.push(rhs);
                        Expr::Mul(v)
                    }
                    other => Expr::Mul(vec![other, rhs]),
                }
            } else {
                match (&acc, &rhs) {
                    (Expr::Const(a), Expr::Const(b)) if !b.is_zero() => Expr::Const(a / b),
                    _ => acc / rhs,
                }
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.eat_op("+-") {
            Some('-') => Ok(-self.unary()?),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat_op("^").is_none() {
            return Ok(base);
        }
        let pos = self.here();
        let saved = self.exact_decimals;
        self.exact_decimals = true;
        let exponent = match self.eat_op("+-") {
            Some('-') => -self.power()?,
            _ => self.power()?,
        };
        self.exact_decimals = saved;
        let q = exponent
            .as_rational()
            .ok_or_else(|| Error::Parse { pos, msg: "exponent must be a rational constant".into() })?;
        if q.is_integer() {
            let k = q.to_integer().to_i64().ok_or_else(|| Error::Parse { pos, msg: "exponent too large".into() })?;
            Ok(base.powi(k))
        } else {
            Ok(base.powq(q))
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| Error::Parse { pos: self.len, msg: "unexpected end of input".into() })?;
        self.pos += 1;
        match tok.kind {
            Tok::Num(s) => {
                if s.contains('.') && !self.exact_decimals {
                    let v: f64 = s
                        .parse()
                        .map_err(|_| Error::Parse { pos: tok.pos, msg: format!("malformed number `{s}`") })?;
                    Ok(Expr::Float(v))
                } else {
                    let r = parse_rational(&s)
                        .ok_or_else(|| Error::Parse { pos: tok.pos, msg: format!("malformed number `{s}`") })?;
                    Ok(Expr::Const(r))
                }
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = ["sin", "cos", "exp", "sqrt"].iter().find(|f| **f == name) {
                    match self.peek() {
                        Some(Token { kind: Tok::LParen, .. }) => self.pos += 1,
                        _ => {
                            return Err(Error::Parse { pos: self.here(), msg: format!("expected `(` after `{f}`") })
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(match *f {
                        "sin" => arg.sin(),
                        "cos" => arg.cos(),
                        "exp" => arg.exp(),
                        _ => arg.sqrt(),
                    });
                }
                if let Some(i) = self.names.index(&name) {
                    return Ok(Expr::Var(i));
                }
                if is_variable_like(&name) {
                    return Err(Error::VarOutOfRange { name, dim: self.names.len() });
                }
                Err(Error::Parse { pos: tok.pos, msg: format!("unknown identifier `{name}`") })
            }
            Tok::Op(c) => Err(Error::Parse { pos: tok.pos, msg: format!("unexpected `{c}`") }),
            Tok::RParen => Err(Error::Parse { pos: tok.pos, msg: "unexpected `)`".into() }),
        }
    }
}

fn is_variable_like(name: &str) -> bool {
    if name == "t" || name == "s" {
        return true;
    }
    let mut chars = name.chars();
    matches!(chars.next(), Some('x') | Some('y'))
        && {
            let rest: String = chars.collect();
            !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())
        }
}
