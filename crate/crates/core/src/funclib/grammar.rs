//! Text grammar for expressions, shared by config files and catalog templates.
//!
//! ```text
//! expr     := factor ('*' factor)*
//! factor   := atom ('^' intatom)?
//! atom     := leaf (':' intatom)? | '1' | '$' ident | '(' expr ')'
//!           | 'conv' '(' expr ',' expr ')' | 'powersub' '(' expr ',' intexpr ')'
//! intatom  := int | ident | '(' intexpr ')'
//! intexpr  := integer polynomial over identifiers with + - *
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{FuncExpr, Leaf, LeafKind};

/// Integer values of template symbols.
pub type Bindings = BTreeMap<String, i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at column {col}: {msg}")]
pub struct ParseError {
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IntExpr {
    Num(i64),
    Sym(String),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
    Neg(Box<IntExpr>),
}

impl IntExpr {
    pub fn eval(&self, b: &Bindings) -> Option<i64> {
        Some(match self {
            IntExpr::Num(n) => *n,
            IntExpr::Sym(s) => *b.get(s)?,
            IntExpr::Add(x, y) => x.eval(b)?.checked_add(y.eval(b)?)?,
            IntExpr::Sub(x, y) => x.eval(b)?.checked_sub(y.eval(b)?)?,
            IntExpr::Mul(x, y) => x.eval(b)?.checked_mul(y.eval(b)?)?,
            IntExpr::Neg(x) => x.eval(b)?.checked_neg()?,
        })
    }

    pub fn symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            IntExpr::Num(_) => {}
            IntExpr::Sym(s) => {
                out.insert(s.clone());
            }
            IntExpr::Add(x, y) | IntExpr::Sub(x, y) | IntExpr::Mul(x, y) => {
                x.symbols(out);
                y.symbols(out);
            }
            IntExpr::Neg(x) => x.symbols(out),
        }
    }

    /// Solve `self = target` when exactly one symbol is unbound and the
    /// expression is affine in it. Returns the unknown and its value.
    pub fn solve(&self, b: &Bindings, target: i64) -> Option<(String, i64)> {
        let mut syms = BTreeSet::new();
        self.symbols(&mut syms);
        let mut free = syms.into_iter().filter(|s| !b.contains_key(s));
        let x = free.next()?;
        if free.next().is_some() {
            return None;
        }
        let at = |v: i64| {
            let mut b2 = b.clone();
            b2.insert(x.clone(), v);
            self.eval(&b2)
        };
        let (f0, f1, f2) = (at(0)?, at(1)?, at(2)?);
        let slope = f1 - f0;
        if f2 - f1 != slope || slope == 0 {
            return None;
        }
        let diff = target - f0;
        (diff % slope == 0).then(|| (x, diff / slope))
    }
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntExpr::Num(n) => write!(f, "{n}"),
            IntExpr::Sym(s) => write!(f, "{s}"),
            IntExpr::Add(x, y) => write!(f, "({x} + {y})"),
            IntExpr::Sub(x, y) => write!(f, "({x} - {y})"),
            IntExpr::Mul(x, y) => write!(f, "{x}*{y}"),
            IntExpr::Neg(x) => write!(f, "-{x}"),
        }
    }
}

/// Expression with symbolic integer slots and named wildcards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatExpr {
    Leaf(LeafKind, Option<IntExpr>),
    Product(Vec<(PatExpr, IntExpr)>),
    Conv(Box<PatExpr>, Box<PatExpr>),
    PowerSub(Box<PatExpr>, IntExpr),
    Wildcard(String),
}

impl PatExpr {
    pub fn symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            PatExpr::Leaf(_, Some(k)) => k.symbols(out),
            PatExpr::Leaf(_, None) | PatExpr::Wildcard(_) => {}
            PatExpr::Product(fs) => {
                for (f, e) in fs {
                    f.symbols(out);
                    e.symbols(out);
                }
            }
            PatExpr::Conv(a, b) => {
                a.symbols(out);
                b.symbols(out);
            }
            PatExpr::PowerSub(f, l) => {
                f.symbols(out);
                l.symbols(out);
            }
        }
    }

    pub fn wildcards(&self, out: &mut BTreeSet<String>) {
        match self {
            PatExpr::Wildcard(w) => {
                out.insert(w.clone());
            }
            PatExpr::Leaf(..) => {}
            PatExpr::Product(fs) => fs.iter().for_each(|(f, _)| f.wildcards(out)),
            PatExpr::Conv(a, b) => {
                a.wildcards(out);
                b.wildcards(out);
            }
            PatExpr::PowerSub(f, _) => f.wildcards(out),
        }
    }

    pub fn instantiate(&self, b: &Bindings) -> Result<FuncExpr, String> {
        self.instantiate_with(b, &BTreeMap::new())
    }

    pub fn instantiate_with(
        &self,
        b: &Bindings,
        wild: &BTreeMap<String, FuncExpr>,
    ) -> Result<FuncExpr, String> {
        let int = |e: &IntExpr| {
            e.eval(b)
                .ok_or_else(|| format!("unbound or overflowing `{e}`"))
        };
        let nonneg = |e: &IntExpr| {
            let v = int(e)?;
            u32::try_from(v).map_err(|_| format!("`{e}` = {v} is not a valid parameter"))
        };
        Ok(match self {
            PatExpr::Leaf(kind, param) => {
                let k = match param {
                    Some(e) => nonneg(e)?,
                    None => 0,
                };
                FuncExpr::Leaf(Leaf::new(*kind, k).map_err(|e| e.to_string())?)
            }
            PatExpr::Product(fs) => {
                let mut parts = Vec::with_capacity(fs.len());
                for (f, e) in fs {
                    let e = nonneg(e)?;
                    if e > 0 {
                        parts.push((f.instantiate_with(b, wild)?, e));
                    }
                }
                FuncExpr::product(parts)
            }
            PatExpr::Conv(x, y) => {
                FuncExpr::conv(x.instantiate_with(b, wild)?, y.instantiate_with(b, wild)?)
            }
            PatExpr::PowerSub(f, l) => {
                let l = nonneg(l)?;
                if l == 0 {
                    return Err("power substitution needs l >= 1".into());
                }
                FuncExpr::power_sub(f.instantiate_with(b, wild)?, l)
            }
            PatExpr::Wildcard(w) => wild
                .get(w)
                .cloned()
                .ok_or_else(|| format!("unbound wildcard ${w}"))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(char),
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| ParseError {
                col,
                msg: format!("integer `{text}` out of range"),
            })?;
            out.push((col, Tok::Int(n)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((col, Tok::Ident(chars[start..i].iter().collect())));
        } else if "*^:(),+-$".contains(c) {
            out.push((col, Tok::Punct(c)));
            i += 1;
        } else {
            return Err(ParseError {
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn new(s: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: tokenize(s)?,
            pos: 0,
            len: s.chars().count(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(c, _)| *c)
            .unwrap_or(self.len + 1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            col: self.col(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.err(format!("unexpected trailing {t:?}")),
        }
    }

    fn expr(&mut self) -> Result<PatExpr, ParseError> {
        let mut factors = Vec::new();
        loop {
            let atom = self.atom()?;
            let exp = if self.eat('^') {
                self.int_atom()?
            } else {
                IntExpr::Num(1)
            };
            match atom {
                PatExpr::Product(inner) => {
                    for (f, e) in inner {
                        let e = match (&exp, &e) {
                            (IntExpr::Num(1), _) => e,
                            (_, IntExpr::Num(1)) => exp.clone(),
                            _ => IntExpr::Mul(Box::new(e), Box::new(exp.clone())),
                        };
                        factors.push((f, e));
                    }
                }
                atom => factors.push((atom, exp)),
            }
            if !self.eat('*') {
                break;
            }
        }
        if factors.len() == 1 && factors[0].1 == IntExpr::Num(1) {
            return Ok(factors.pop().expect("one factor").0);
        }
        Ok(PatExpr::Product(factors))
    }

    fn atom(&mut self) -> Result<PatExpr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Punct('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Punct('$')) => {
                self.pos += 1;
                match self.peek().cloned() {
                    Some(Tok::Ident(name)) => {
                        self.pos += 1;
                        Ok(PatExpr::Wildcard(name))
                    }
                    _ => self.err("expected wildcard name after `$`"),
                }
            }
            Some(Tok::Int(1)) => {
                self.pos += 1;
                Ok(PatExpr::Leaf(LeafKind::One, None))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "conv" => {
                        self.expect('(')?;
                        let a = self.expr()?;
                        self.expect(',')?;
                        let b = self.expr()?;
                        self.expect(')')?;
                        Ok(PatExpr::Conv(Box::new(a), Box::new(b)))
                    }
                    "powersub" => {
                        self.expect('(')?;
                        let a = self.expr()?;
                        self.expect(',')?;
                        let l = self.int_expr()?;
                        self.expect(')')?;
                        Ok(PatExpr::PowerSub(Box::new(a), l))
                    }
                    "absmu" => Ok(PatExpr::Leaf(LeafKind::Xi, Some(IntExpr::Num(2)))),
                    _ => {
                        let kind = match LeafKind::from_grammar_name(&name) {
                            Some(k) => k,
                            None => {
                                self.pos -= 1;
                                return self.err(format!("unknown function `{name}`"));
                            }
                        };
                        let param = if self.eat(':') {
                            Some(self.int_atom()?)
                        } else {
                            None
                        };
                        match (kind.takes_param(), param.is_some()) {
                            (true, false) => {
                                self.err(format!("`{name}` needs a parameter `{name}:k`"))
                            }
                            (false, true) => self.err(format!("`{name}` takes no parameter")),
                            _ => Ok(PatExpr::Leaf(kind, param)),
                        }
                    }
                }
            }
            Some(t) => self.err(format!("unexpected {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }

    fn int_atom(&mut self) -> Result<IntExpr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(IntExpr::Num(n))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(IntExpr::Sym(s))
            }
            Some(Tok::Punct('(')) => {
                self.pos += 1;
                let e = self.int_expr()?;
                self.expect(')')?;
                Ok(e)
            }
            _ => self.err("expected integer, symbol or `(`"),
        }
    }

    fn int_expr(&mut self) -> Result<IntExpr, ParseError> {
        let mut acc = self.int_term()?;
        loop {
            if self.eat('+') {
                acc = IntExpr::Add(Box::new(acc), Box::new(self.int_term()?));
            } else if self.eat('-') {
                acc = IntExpr::Sub(Box::new(acc), Box::new(self.int_term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn int_term(&mut self) -> Result<IntExpr, ParseError> {
        let mut acc = self.int_unary()?;
        while self.eat('*') {
            acc = IntExpr::Mul(Box::new(acc), Box::new(self.int_unary()?));
        }
        Ok(acc)
    }

    fn int_unary(&mut self) -> Result<IntExpr, ParseError> {
        if self.eat('-') {
            return Ok(IntExpr::Neg(Box::new(self.int_unary()?)));
        }
        self.int_atom()
    }
}

/// Parse an expression in the config/catalog grammar.
pub fn parse_expr(s: &str) -> Result<PatExpr, ParseError> {
    let mut p = Parser::new(s)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parse an integer expression such as `2*s - k`.
pub fn parse_int_expr(s: &str) -> Result<IntExpr, ParseError> {
    let mut p = Parser::new(s)?;
    let e = p.int_expr()?;
    p.finish()?;
    Ok(e)
}
