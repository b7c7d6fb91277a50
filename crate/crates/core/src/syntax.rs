//! Policy DSL: lexer, parser and the canonical printer.
//!
//! Identifiers name variables when bound by an enclosing quantifier or
//! `freeze`, and constants otherwise. `?x` always names a variable;
//! quoted strings always name constants.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result, Span};
use crate::formula::{Atom, Formula, Pred, Quantified, Restriction};
use crate::schema::{ClosedWorld, Kind, Moding, PredicateDecl, Schema};
use crate::temporal::{finally, globally, TemporalFormula};
use crate::term::{GroundSet, Symbol, Term, Time};

const KEYWORDS: &[&str] = &[
    "forall", "exists", "top", "bot", "and", "or", "not", "since", "until", "boxpast", "boxfuture", "once",
    "eventually", "freeze", "inf",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    QVar(String),
    Int(u64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Amp,
    Bar,
    Tilde,
    Arrow,
    Plus,
    At,
    Semi,
    Slash,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::QVar(s) => write!(f, "`?{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Arrow => f.write_str("`=>`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::At => f.write_str("`@`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let err = |span: Span, message: String| Error::Parse { span, message };

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let span = Span { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump!();
            }
            continue;
        }
        if c == '/' {
            bump!();
            if chars.peek() == Some(&'/') {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    bump!();
                }
            } else {
                out.push((Tok::Slash, span));
            }
            continue;
        }
        if is_ident_start(c) || c == '?' {
            let qvar = c == '?';
            if qvar {
                bump!();
                if !chars.peek().is_some_and(|&c| is_ident_start(c)) {
                    return Err(err(span, "expected a variable name after `?`".into()));
                }
            }
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if !is_ident_continue(c) {
                    break;
                }
                s.push(c);
                bump!();
            }
            out.push((if qvar { Tok::QVar(s) } else { Tok::Ident(s) }, span));
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                s.push(c);
                bump!();
            }
            let n = s.parse::<u64>().map_err(|_| err(span, format!("integer `{s}` out of range")))?;
            out.push((Tok::Int(n), span));
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    None => return Err(err(span, "unterminated string".into())),
                    Some('"') => break,
                    Some('\\') => match bump!() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('r') => s.push('\r'),
                        Some('0') => s.push('\0'),
                        Some(c @ ('"' | '\\' | '\'')) => s.push(c),
                        Some('u') => {
                            if bump!() != Some('{') {
                                return Err(err(span, "expected `{` in unicode escape".into()));
                            }
                            let mut hex = String::new();
                            loop {
                                match bump!() {
                                    Some('}') => break,
                                    Some(h) if h.is_ascii_hexdigit() => hex.push(h),
                                    _ => return Err(err(span, "malformed unicode escape".into())),
                                }
                            }
                            let ch = u32::from_str_radix(&hex, 16)
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| err(span, "invalid unicode escape".into()))?;
                            s.push(ch);
                        }
                        _ => return Err(err(span, "unknown escape".into())),
                    },
                    Some(c) => s.push(c),
                }
            }
            out.push((Tok::Str(s), span));
            continue;
        }
        bump!();
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '&' => Tok::Amp,
            '|' => Tok::Bar,
            '~' => Tok::Tilde,
            '+' => Tok::Plus,
            '@' => Tok::At,
            ';' => Tok::Semi,
            '=' => {
                if chars.peek() == Some(&'>') {
                    bump!();
                    Tok::Arrow
                } else {
                    Tok::Eq
                }
            }
            other => return Err(err(span, format!("unexpected character `{other}`"))),
        };
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    scope: Vec<Symbol>,
}

impl Parser {
    fn new(src: &str) -> Result<Parser> {
        Ok(Parser { toks: lex(src)?, pos: 0, scope: Vec::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { span: self.span(), message: message.into() })
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            other => self.error(format!("expected a name, found {other}")),
        }
    }

    fn finish(&mut self) -> Result<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(format!("unexpected {} after the formula", self.peek()))
        }
    }

    fn var_list(&mut self) -> Result<Vec<Symbol>> {
        let mut vars = vec![Symbol::from(self.ident()?)];
        while *self.peek() == Tok::Comma {
            self.next();
            vars.push(Symbol::from(self.ident()?));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return self.error(format!("variable `{v}` is bound twice"));
            }
        }
        self.expect(Tok::Dot)?;
        Ok(vars)
    }

    fn with_scope<T>(&mut self, vars: &[Symbol], f: impl FnOnce(&mut Parser) -> Result<T>) -> Result<T> {
        let mark = self.scope.len();
        self.scope.extend(vars.iter().cloned());
        let out = f(self);
        self.scope.truncate(mark);
        out
    }

    // ---- formulas of the temporal logic (the sublogic is a fragment) ----

    fn formula(&mut self) -> Result<TemporalFormula> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Bar || self.is_kw("or") {
            self.next();
            let rhs = self.conjunction()?;
            lhs = TemporalFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<TemporalFormula> {
        let mut lhs = self.binary_temporal()?;
        while *self.peek() == Tok::Amp || self.is_kw("and") {
            self.next();
            let rhs = self.binary_temporal()?;
            lhs = TemporalFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<TemporalFormula> {
        let lhs = self.unary()?;
        let op = if self.is_kw("since") {
            TemporalFormula::since
        } else if self.is_kw("until") {
            TemporalFormula::until
        } else {
            return Ok(lhs);
        };
        self.next();
        let rhs = self.unary()?;
        if self.is_kw("since") || self.is_kw("until") {
            return self.error("`since` and `until` do not associate; add parentheses");
        }
        Ok(op(lhs, rhs))
    }

    fn unary(&mut self) -> Result<TemporalFormula> {
        let Tok::Ident(word) = self.peek().clone() else { return self.primary() };
        let boxed = |f: TemporalFormula| Box::new(f);
        match word.as_str() {
            "not" => {
                self.next();
                Ok(TemporalFormula::negate(self.unary()?))
            }
            "boxpast" => {
                self.next();
                Ok(TemporalFormula::BoxPast(boxed(self.unary()?)))
            }
            "boxfuture" => {
                self.next();
                Ok(TemporalFormula::BoxFuture(boxed(self.unary()?)))
            }
            "once" => {
                self.next();
                Ok(TemporalFormula::once(self.unary()?))
            }
            "eventually" => {
                self.next();
                Ok(TemporalFormula::eventually(self.unary()?))
            }
            "freeze" => {
                self.next();
                let x = Symbol::from(self.ident()?);
                self.expect(Tok::Dot)?;
                let body = self.with_scope(std::slice::from_ref(&x), |p| p.formula())?;
                Ok(TemporalFormula::Freeze(x, boxed(body)))
            }
            "forall" | "exists" => {
                self.next();
                let vars = self.var_list()?;
                let (guard, body) = self.with_scope(&vars, |p| {
                    p.expect(Tok::LParen)?;
                    let guard = p.restriction()?;
                    p.expect(Tok::RParen)?;
                    if word == "forall" {
                        p.expect(Tok::Arrow)?;
                    } else if *p.peek() == Tok::Amp || p.is_kw("and") {
                        p.next();
                    } else {
                        return p.error(format!("expected `&` after the guard, found {}", p.peek()));
                    }
                    Ok((guard, p.formula()?))
                })?;
                Ok(if word == "forall" {
                    TemporalFormula::Forall(vars, guard, boxed(body))
                } else {
                    TemporalFormula::Exists(vars, guard, boxed(body))
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<TemporalFormula> {
        match self.peek() {
            Tok::LParen => {
                self.next();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) if s == "top" => {
                self.next();
                Ok(TemporalFormula::Top)
            }
            Tok::Ident(s) if s == "bot" => {
                self.next();
                Ok(TemporalFormula::Bot)
            }
            Tok::Ident(_) | Tok::Tilde => Ok(TemporalFormula::Atom(self.atom()?)),
            other => self.error(format!("expected a formula, found {other}")),
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let negated = if *self.peek() == Tok::Tilde {
            self.next();
            true
        } else {
            false
        };
        let name = self.ident()?;
        if *self.peek() != Tok::LParen {
            return self.error(format!("expected `(` after predicate `{name}`"));
        }
        let mut args = self.term_list(Tok::LParen, Tok::RParen)?;
        if *self.peek() == Tok::At {
            self.next();
            args.push(self.term()?);
        }
        Ok(Atom { pred: Pred { name: Symbol::from(name), negated }, args })
    }

    // ---- restrictions ----

    fn restriction(&mut self) -> Result<Restriction> {
        let mut lhs = self.restriction_conjunction()?;
        while *self.peek() == Tok::Bar || self.is_kw("or") {
            self.next();
            let rhs = self.restriction_conjunction()?;
            lhs = Restriction::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn restriction_conjunction(&mut self) -> Result<Restriction> {
        let mut lhs = self.restriction_primary()?;
        while *self.peek() == Tok::Amp || self.is_kw("and") {
            self.next();
            let rhs = self.restriction_primary()?;
            lhs = Restriction::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn restriction_primary(&mut self) -> Result<Restriction> {
        match self.peek() {
            Tok::LParen => {
                self.next();
                let c = self.restriction()?;
                self.expect(Tok::RParen)?;
                Ok(c)
            }
            Tok::Ident(s) if s == "top" => {
                self.next();
                Ok(Restriction::Top)
            }
            Tok::Ident(s) if s == "bot" => {
                self.next();
                Ok(Restriction::Bot)
            }
            Tok::Ident(s) if s == "exists" => {
                self.next();
                let vars = self.var_list()?;
                let body = self.with_scope(&vars, |p| p.restriction())?;
                Ok(vars.into_iter().rev().fold(body, |c, x| Restriction::Exists(x, Box::new(c))))
            }
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => {
                self.error(format!("`{s}` is not allowed in a quantifier guard"))
            }
            _ => Ok(Restriction::Atom(self.atom()?)),
        }
    }

    // ---- terms ----

    fn term_list(&mut self, open: Tok, close: Tok) -> Result<Vec<Term>> {
        self.expect(open)?;
        let mut args = Vec::new();
        if *self.peek() != close {
            args.push(self.term()?);
            while *self.peek() == Tok::Comma {
                self.next();
                args.push(self.term()?);
            }
        }
        self.expect(close)?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term> {
        let span = self.span();
        let base = self.base_term()?;
        if *self.peek() != Tok::Plus {
            return Ok(base);
        }
        self.next();
        let Tok::Int(d) = self.next() else {
            return Err(Error::Parse { span: self.span(), message: "expected an integer offset after `+`".into() });
        };
        match base {
            Term::Var(_) | Term::Time(_) | Term::Offset(..) => Ok(Term::offset(base, d)),
            _ => Err(Error::Parse { span, message: "only variables and times take an offset".into() }),
        }
    }

    fn base_term(&mut self) -> Result<Term> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(Term::time(n))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Term::Const(Symbol::from(s)))
            }
            Tok::QVar(s) => {
                self.next();
                Ok(Term::Var(Symbol::from(s)))
            }
            Tok::Ident(s) if s == "inf" => {
                self.next();
                Ok(Term::infinity())
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if *self.peek() == Tok::LParen {
                    let args = self.term_list(Tok::LParen, Tok::RParen)?;
                    return Ok(Term::App(Symbol::from(name), args));
                }
                let sym = Symbol::from(name);
                Ok(if self.scope.contains(&sym) { Term::Var(sym) } else { Term::Const(sym) })
            }
            Tok::LParen => {
                let mut items = self.term_list(Tok::LParen, Tok::RParen)?;
                match items.len() {
                    0 => self.error("empty tuple"),
                    1 => Ok(items.pop().unwrap()),
                    _ => Ok(Term::Tuple(items)),
                }
            }
            Tok::LBrace => {
                let span = self.span();
                let items = self.term_list(Tok::LBrace, Tok::RBrace)?;
                if items.iter().any(|t| !t.is_ground()) {
                    return Err(Error::Parse { span, message: "set elements must be ground".into() });
                }
                Ok(Term::Set(items.into_iter().collect()))
            }
            other => self.error(format!("expected a term, found {other}")),
        }
    }

    // ---- schema preamble ----

    fn at_declaration(&self) -> bool {
        (self.is_kw("subjective") || self.is_kw("objective")) && matches!(self.peek_at(1), Tok::Ident(_))
    }

    fn positions(&mut self) -> Result<Vec<usize>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while let Tok::Int(n) = *self.peek() {
            self.next();
            if n == 0 {
                return self.error("argument positions are 1-based");
            }
            out.push(n as usize - 1);
            if *self.peek() == Tok::Comma {
                self.next();
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn declaration(&mut self) -> Result<PredicateDecl> {
        let span = self.span();
        let kind = if self.eat_kw("subjective") {
            Kind::Subjective
        } else {
            self.next();
            Kind::Objective
        };
        let name = self.ident()?;
        self.expect(Tok::Slash)?;
        let Tok::Int(arity) = self.next() else { return self.error("expected an arity") };
        let arity = arity as usize;
        let mut decl = match kind {
            Kind::Subjective => PredicateDecl::subjective(&name, arity),
            Kind::Objective => PredicateDecl::objective(&name, arity, Moding::default()),
        };
        loop {
            if self.eat_kw("mode") {
                if kind == Kind::Subjective {
                    return Err(Error::Parse { span, message: format!("subjective `{name}` cannot have a mode") });
                }
                self.expect(Tok::LParen)?;
                let mut moding = Moding::default();
                loop {
                    let which = self.ident()?;
                    self.expect(Tok::Eq)?;
                    let ps = self.positions()?;
                    match which.as_str() {
                        "in" => moding.input.extend(ps),
                        "out" => moding.output.extend(ps),
                        other => return self.error(format!("expected `in` or `out`, found `{other}`")),
                    }
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                decl.moding = Some(moding);
            } else if self.eat_kw("closed") {
                self.expect(Tok::LParen)?;
                decl.closed = match self.ident()?.as_str() {
                    "open" => ClosedWorld::Open,
                    "horizon" => ClosedWorld::Horizon,
                    "always" => ClosedWorld::Always,
                    other => return self.error(format!("unknown closed-world setting `{other}`")),
                };
                self.expect(Tok::RParen)?;
            } else {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        Ok(decl)
    }

    fn declarations(&mut self) -> Result<Vec<PredicateDecl>> {
        let mut out = Vec::new();
        while self.at_declaration() {
            out.push(self.declaration()?);
        }
        Ok(out)
    }
}

/// Parses a sublogic formula.
pub fn parse_formula(src: &str) -> Result<Formula> {
    let mut p = Parser::new(src)?;
    let start = p.span();
    let f = p.formula()?;
    p.finish()?;
    f.to_sublogic().ok_or(Error::Parse { span: start, message: "temporal operators are not allowed here".into() })
}

/// Parses an outer temporal formula.
pub fn parse_temporal(src: &str) -> Result<TemporalFormula> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_restriction(src: &str) -> Result<Restriction> {
    let mut p = Parser::new(src)?;
    let c = p.restriction()?;
    p.finish()?;
    Ok(c)
}

/// Parses one ground atom, e.g. `~ftr(Alice, mr, 3)`.
pub fn parse_atom(src: &str) -> Result<Atom> {
    let mut p = Parser::new(src)?;
    let a = p.atom()?;
    p.finish()?;
    Ok(a)
}

/// Parses a schema preamble made only of declarations.
pub fn parse_schema(src: &str) -> Result<Vec<PredicateDecl>> {
    let mut p = Parser::new(src)?;
    let decls = p.declarations()?;
    p.finish()?;
    Ok(decls)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyBody {
    /// `G alpha`
    Globally(TemporalFormula),
    /// `F alpha`
    Finally(TemporalFormula),
    /// A bare sublogic formula with explicit time arguments.
    Formula(Formula),
}

impl PolicyBody {
    pub fn compile(&self) -> Formula {
        match self {
            PolicyBody::Globally(a) => globally(a),
            PolicyBody::Finally(a) => finally(a),
            PolicyBody::Formula(f) => f.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyFile {
    pub declarations: Vec<PredicateDecl>,
    pub body: PolicyBody,
}

impl PolicyFile {
    /// `base` extended with the preamble declarations.
    pub fn schema(&self, base: &Schema) -> Result<Schema> {
        let mut s = base.clone();
        for d in &self.declarations {
            s.declare(d.clone())?;
        }
        Ok(s)
    }
}

/// Parses a policy file: an optional declaration preamble followed by
/// `G alpha`, `F alpha`, or a sublogic formula.
pub fn parse_policy(src: &str) -> Result<PolicyFile> {
    let mut p = Parser::new(src)?;
    let declarations = p.declarations()?;
    if *p.peek() == Tok::Eof {
        return p.error("expected a policy formula");
    }
    let wrapper = match p.peek() {
        Tok::Ident(s) if (s == "G" || s == "F") && *p.peek_at(1) != Tok::LParen => Some(s.clone()),
        _ => None,
    };
    if wrapper.is_some() {
        p.next();
    }
    let start = p.span();
    let f = p.formula()?;
    p.finish()?;
    let body = match wrapper.as_deref() {
        Some("G") => PolicyBody::Globally(f),
        Some(_) => PolicyBody::Finally(f),
        None => PolicyBody::Formula(f.to_sublogic().ok_or(Error::Parse {
            span: start,
            message: "a policy with temporal operators must start with `G` or `F`".into(),
        })?),
    };
    Ok(PolicyFile { declarations, body })
}

// ---- printing ----

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    OrLeft,
    OrRight,
    AndLeft,
    AndRight,
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_continue) && !KEYWORDS.contains(&s)
}

struct Printer<'a> {
    out: &'a mut String,
    scope: Vec<Symbol>,
}

impl Printer<'_> {
    fn term(&mut self, t: &Term) {
        match t {
            Term::Const(c) => {
                if is_plain_ident(c.as_str()) && !self.scope.contains(c) {
                    self.out.push_str(c.as_str());
                } else {
                    let _ = write!(self.out, "{:?}", c.as_str());
                }
            }
            Term::Var(v) => {
                if !self.scope.contains(v) {
                    self.out.push('?');
                }
                self.out.push_str(v.as_str());
            }
            Term::Time(Time::At(n)) => {
                let _ = write!(self.out, "{n}");
            }
            Term::Time(Time::Infinity) => self.out.push_str("inf"),
            Term::Offset(base, d) => {
                self.term(base);
                let _ = write!(self.out, "+{d}");
            }
            Term::App(f, args) => {
                if is_plain_ident(f.as_str()) {
                    self.out.push_str(f.as_str());
                } else {
                    let _ = write!(self.out, "{:?}", f.as_str());
                }
                self.terms("(", args, ")");
            }
            Term::Tuple(items) => self.terms("(", items, ")"),
            Term::Set(s) => {
                let items: Vec<Term> = s.iter().cloned().collect();
                self.terms("{", &items, "}");
            }
        }
    }

    fn terms(&mut self, open: &str, items: &[Term], close: &str) {
        self.out.push_str(open);
        for (i, t) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.term(t);
        }
        self.out.push_str(close);
    }

    fn atom(&mut self, a: &Atom) {
        if a.pred.negated {
            self.out.push('~');
        }
        self.out.push_str(a.pred.name.as_str());
        self.terms("(", &a.args, ")");
    }

    fn vars(&mut self, vars: &[Symbol]) {
        for (i, v) in vars.iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            self.out.push_str(v.as_str());
        }
    }

    fn scoped(&mut self, vars: &[Symbol], f: impl FnOnce(&mut Self)) {
        let mark = self.scope.len();
        self.scope.extend(vars.iter().cloned());
        f(self);
        self.scope.truncate(mark);
    }

    fn restriction(&mut self, c: &Restriction, ctx: Ctx) {
        let paren = match c {
            Restriction::Or(..) => matches!(ctx, Ctx::OrRight | Ctx::AndLeft | Ctx::AndRight),
            Restriction::And(..) => ctx == Ctx::AndRight,
            Restriction::Exists(..) => ctx != Ctx::Top,
            _ => false,
        };
        if paren {
            self.out.push('(');
        }
        match c {
            Restriction::Atom(a) => self.atom(a),
            Restriction::Top => self.out.push_str("top"),
            Restriction::Bot => self.out.push_str("bot"),
            Restriction::And(l, r) => {
                self.restriction(l, Ctx::AndLeft);
                self.out.push_str(" and ");
                self.restriction(r, Ctx::AndRight);
            }
            Restriction::Or(l, r) => {
                self.restriction(l, Ctx::OrLeft);
                self.out.push_str(" or ");
                self.restriction(r, Ctx::OrRight);
            }
            Restriction::Exists(x, body) => {
                self.out.push_str("exists ");
                self.out.push_str(x.as_str());
                self.out.push_str(". ");
                self.scoped(std::slice::from_ref(x), |p| p.restriction(body, Ctx::Top));
            }
        }
        if paren {
            self.out.push(')');
        }
    }

    fn quantified(&mut self, keyword: &str, q: &Quantified, sep: &str) {
        self.out.push_str(keyword);
        self.out.push(' ');
        self.vars(&q.vars);
        self.out.push_str(". (");
        self.scoped(&q.vars, |p| {
            p.restriction(&q.guard, Ctx::Top);
            p.out.push_str(") ");
            p.out.push_str(sep);
            p.out.push(' ');
            p.formula(&q.body, Ctx::Top);
        });
    }

    fn formula(&mut self, f: &Formula, ctx: Ctx) {
        let paren = match f {
            Formula::Or(..) => matches!(ctx, Ctx::OrRight | Ctx::AndLeft | Ctx::AndRight),
            Formula::And(..) => ctx == Ctx::AndRight,
            Formula::Forall(_) | Formula::Exists(_) => ctx != Ctx::Top,
            _ => false,
        };
        if paren {
            self.out.push('(');
        }
        match f {
            Formula::Atom(a) => self.atom(a),
            Formula::Top => self.out.push_str("top"),
            Formula::Bot => self.out.push_str("bot"),
            Formula::And(l, r) => {
                self.formula(l, Ctx::AndLeft);
                self.out.push_str(" and ");
                self.formula(r, Ctx::AndRight);
            }
            Formula::Or(l, r) => {
                self.formula(l, Ctx::OrLeft);
                self.out.push_str(" or ");
                self.formula(r, Ctx::OrRight);
            }
            Formula::Forall(q) => self.quantified("forall", q, "=>"),
            Formula::Exists(q) => self.quantified("exists", q, "&"),
        }
        if paren {
            self.out.push(')');
        }
    }
}

fn render(f: impl FnOnce(&mut Printer)) -> String {
    let mut out = String::new();
    f(&mut Printer { out: &mut out, scope: Vec::new() });
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(|p| p.term(self)))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(|p| p.atom(self)))
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(|p| p.restriction(self, Ctx::Top)))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(|p| p.formula(self, Ctx::Top)))
    }
}

impl fmt::Display for GroundSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Term::Set(self.clone()), f)
    }
}
