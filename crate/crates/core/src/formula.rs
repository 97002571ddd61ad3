//! First-order formulas: parsing, printing, substitution and alpha-equality.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::latex::escape_latex;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// Function application; zero arguments is a constant.
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(head: &str, args: Vec<Term>) -> Term {
        Term::App(head.to_string(), args)
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn subst(&self, map: &HashMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(h, args) => Term::App(h.clone(), args.iter().map(|a| a.subst(map)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String, Vec<Term>),
    True,
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Equal(Term, Term),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string(), Vec::new())
    }

    pub fn pred(name: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(name.to_string(), args)
    }

    pub fn negate(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
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

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(x: &str, body: Formula) -> Formula {
        Formula::Forall(x.to_string(), Box::new(body))
    }

    pub fn exists(x: &str, body: Formula) -> Formula {
        Formula::Exists(x.to_string(), Box::new(body))
    }

    /// Free term variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut term = |t: &Term| {
            for v in t.vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Formula::Atom(_, args) => args.iter().for_each(&mut term),
            Formula::Equal(a, b) => {
                term(a);
                term(b);
            }
            Formula::True | Formula::False => {}
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Forall(x, body) | Formula::Exists(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    fn map_children(&self, mut f: impl FnMut(&Formula) -> Formula) -> Formula {
        match self {
            Formula::Not(a) => Formula::negate(f(a)),
            Formula::And(a, b) => Formula::and(f(a), f(b)),
            Formula::Or(a, b) => Formula::or(f(a), f(b)),
            Formula::Implies(a, b) => Formula::implies(f(a), f(b)),
            Formula::Iff(a, b) => Formula::iff(f(a), f(b)),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_formula(self, Style::Ascii))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        Printer {
            style: Style::Ascii,
            out: &mut out,
        }
        .term(self, false);
        f.write_str(&out)
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at offset {pos}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub pos: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Tilde,
    And,
    Or,
    Arrow,
    Iff,
    Forall,
    Exists,
    True,
    False,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::And => f.write_str("`/\\`"),
            Tok::Or => f.write_str("`\\/`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Iff => f.write_str("`<->`"),
            Tok::Forall => f.write_str("`forall`"),
            Tok::Exists => f.write_str("`exists`"),
            Tok::True => f.write_str("`True`"),
            Tok::False => f.write_str("`False`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let rest = &text[i..];
        let sym = [
            ("<->", Tok::Iff),
            ("->", Tok::Arrow),
            ("/\\", Tok::And),
            ("\\/", Tok::Or),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            (",", Tok::Comma),
            ("=", Tok::Eq),
            ("~", Tok::Tilde),
        ]
        .into_iter()
        .find(|(s, _)| rest.starts_with(s));
        if let Some((s, tok)) = sym {
            toks.push((start, tok));
            i += s.len();
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
            {
                i += 1;
            }
            let word = &text[start..i];
            toks.push((
                start,
                match word {
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    "True" => Tok::True,
                    "False" => Tok::False,
                    _ => Tok::Ident(word.to_string()),
                },
            ));
            continue;
        }
        let ch = rest.chars().next().unwrap();
        return Err(ParseError {
            pos: start,
            expected: vec!["a formula token".into()],
            found: format!("`{ch}`"),
        });
    }
    toks.push((text.len(), Tok::Eof));
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            pos: self.toks[self.at].0,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, t: Tok, name: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implication()?;
        if self.eat(&Tok::Iff) {
            return Ok(Formula::iff(lhs, self.formula()?));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            return Ok(Formula::implies(lhs, self.implication()?));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.conjunction()?;
        if self.eat(&Tok::Or) {
            return Ok(Formula::or(lhs, self.disjunction()?));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.negation()?;
        if self.eat(&Tok::And) {
            return Ok(Formula::and(lhs, self.conjunction()?));
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> Result<Formula, ParseError> {
        if self.eat(&Tok::Tilde) {
            return Ok(Formula::negate(self.negation()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        if matches!(
            self.peek(),
            Tok::Eof
                | Tok::RParen
                | Tok::Comma
                | Tok::Eq
                | Tok::And
                | Tok::Or
                | Tok::Arrow
                | Tok::Iff
        ) {
            return Err(self.error(&[
                "identifier",
                "`(`",
                "`~`",
                "`True`",
                "`False`",
                "`forall`",
                "`exists`",
            ]));
        }
        match self.bump() {
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Forall => self.quantifier(true),
            Tok::Exists => self.quantifier(false),
            Tok::LParen => {
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                if self.peek() == &Tok::Eq {
                    if let Formula::Atom(head, args) = inner {
                        self.bump();
                        let lhs = head_to_term(head, args);
                        return Ok(Formula::Equal(lhs, self.term()?));
                    }
                }
                Ok(inner)
            }
            Tok::Ident(name) => {
                let args = self.arguments()?;
                if self.eat(&Tok::Eq) {
                    let lhs = head_to_term(name, args);
                    return Ok(Formula::Equal(lhs, self.term()?));
                }
                Ok(Formula::Atom(name, args))
            }
            _ => unreachable!("checked above"),
        }
    }

    fn quantifier(&mut self, universal: bool) -> Result<Formula, ParseError> {
        let mut binders = Vec::new();
        while let Tok::Ident(name) = self.peek().clone() {
            self.bump();
            binders.push(name);
        }
        if binders.is_empty() {
            return Err(self.error(&["identifier"]));
        }
        self.expect(Tok::Comma, "`,`")?;
        let mut body = self.formula()?;
        for x in binders.into_iter().rev() {
            body = if universal {
                Formula::Forall(x, Box::new(body))
            } else {
                Formula::Exists(x, Box::new(body))
            };
        }
        Ok(body)
    }

    fn arguments(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(name) => {
                    self.bump();
                    args.push(Term::Var(name));
                }
                Tok::LParen => {
                    self.bump();
                    args.push(self.term()?);
                    self.expect(Tok::RParen, "`)`")?;
                }
                _ => return Ok(args),
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if !matches!(self.peek(), Tok::Ident(_) | Tok::LParen) {
            return Err(self.error(&["identifier", "`(`"]));
        }
        match self.bump() {
            Tok::Ident(name) => {
                let args = self.arguments()?;
                Ok(head_to_term(name, args))
            }
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => unreachable!("checked above"),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input", "an operator"]))
        }
    }
}

fn head_to_term(head: String, args: Vec<Term>) -> Term {
    if args.is_empty() {
        Term::Var(head)
    } else {
        Term::App(head, args)
    }
}

/// Parses a formula.
///
/// Precedence, tightest first: atoms and `t = t`, `~`, `/\`, `\/`, `->`,
/// `<->`. The binary connectives associate to the right and quantifiers
/// extend as far right as possible.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses a term: an identifier applied to zero or more atomic arguments.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

// ---------------------------------------------------------------------------
// Substitution and alpha-equality

/// Capture-avoiding substitution of `t` for the free occurrences of `v`.
pub fn substitute(f: &Formula, v: &str, t: &Term) -> Formula {
    let mut map = HashMap::new();
    map.insert(v.to_string(), t.clone());
    substitute_all(f, &map)
}

/// Simultaneous capture-avoiding substitution.
pub fn substitute_all(f: &Formula, map: &HashMap<String, Term>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Atom(p, args) => {
            Formula::Atom(p.clone(), args.iter().map(|a| a.subst(map)).collect())
        }
        Formula::Equal(a, b) => Formula::Equal(a.subst(map), b.subst(map)),
        Formula::True | Formula::False => f.clone(),
        Formula::Forall(x, body) | Formula::Exists(x, body) => {
            let universal = matches!(f, Formula::Forall(..));
            let mut inner = map.clone();
            inner.remove(x);
            let body_free = body.free_vars();
            inner.retain(|k, _| body_free.contains(k));
            let captures = inner.values().any(|t| t.vars().contains(x));
            let (binder, new_body) = if captures {
                let mut avoid = body_free;
                for (k, t) in &inner {
                    avoid.insert(k.clone());
                    avoid.extend(t.vars());
                }
                let fresh = prime_fresh(x, &avoid);
                inner.insert(x.clone(), Term::Var(fresh.clone()));
                (fresh, substitute_all(body, &inner))
            } else {
                (x.clone(), substitute_all(body, &inner))
            };
            if universal {
                Formula::Forall(binder, Box::new(new_body))
            } else {
                Formula::Exists(binder, Box::new(new_body))
            }
        }
        _ => f.map_children(|c| substitute_all(c, map)),
    }
}

/// Appends `'` to `base` until it is not in `avoid`.
pub fn prime_fresh(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while avoid.contains(&name) {
        name.push('\'');
    }
    name
}

fn lookup(stack: &[&str], name: &str) -> Option<usize> {
    stack.iter().rposition(|b| *b == name)
}

fn term_alpha(a: &Term, b: &Term, sa: &[&str], sb: &[&str]) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => match (lookup(sa, x), lookup(sb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| term_alpha(x, y, sa, sb))
        }
        _ => false,
    }
}

fn alpha<'a>(a: &'a Formula, b: &'a Formula, sa: &mut Vec<&'a str>, sb: &mut Vec<&'a str>) -> bool {
    use Formula::*;
    match (a, b) {
        (True, True) | (False, False) => true,
        (Atom(p, xs), Atom(q, ys)) => {
            p == q
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| term_alpha(x, y, sa, sb))
        }
        (Equal(x1, x2), Equal(y1, y2)) => term_alpha(x1, y1, sa, sb) && term_alpha(x2, y2, sa, sb),
        (Not(x), Not(y)) => alpha(x, y, sa, sb),
        (And(x1, x2), And(y1, y2))
        | (Or(x1, x2), Or(y1, y2))
        | (Implies(x1, x2), Implies(y1, y2))
        | (Iff(x1, x2), Iff(y1, y2)) => alpha(x1, y1, sa, sb) && alpha(x2, y2, sa, sb),
        (Forall(x, p), Forall(y, q)) | (Exists(x, p), Exists(y, q)) => {
            sa.push(x);
            sb.push(y);
            let r = alpha(p, q, sa, sb);
            sa.pop();
            sb.pop();
            r
        }
        _ => false,
    }
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_equal(a: &Formula, b: &Formula) -> bool {
    alpha(a, b, &mut Vec::new(), &mut Vec::new())
}

/// One-way first-order matching: finds an instantiation of `vars` making
/// `pattern` alpha-equal to `target`. Bindings may only mention variables
/// free in `target`.
pub fn match_formula(
    pattern: &Formula,
    target: &Formula,
    vars: &[String],
) -> Option<HashMap<String, Term>> {
    let mut m = Matcher {
        vars,
        subst: HashMap::new(),
    };
    m.formula(pattern, target, &mut Vec::new(), &mut Vec::new())
        .then_some(m.subst)
}

struct Matcher<'v> {
    vars: &'v [String],
    subst: HashMap<String, Term>,
}

impl Matcher<'_> {
    fn term(&mut self, p: &Term, t: &Term, sp: &[&str], st: &[&str]) -> bool {
        match p {
            Term::Var(v) => {
                if let Some(i) = lookup(sp, v) {
                    return matches!(t, Term::Var(w) if lookup(st, w) == Some(i));
                }
                if self.vars.contains(v) {
                    if t.vars().iter().any(|w| lookup(st, w).is_some()) {
                        return false;
                    }
                    return match self.subst.get(v) {
                        Some(bound) => bound == t,
                        None => {
                            self.subst.insert(v.clone(), t.clone());
                            true
                        }
                    };
                }
                matches!(t, Term::Var(w) if w == v && lookup(st, w).is_none())
            }
            Term::App(f, xs) => match t {
                Term::App(g, ys) if f == g && xs.len() == ys.len() => {
                    xs.iter().zip(ys).all(|(x, y)| self.term(x, y, sp, st))
                }
                _ => false,
            },
        }
    }

    fn formula<'a>(
        &mut self,
        p: &'a Formula,
        t: &'a Formula,
        sp: &mut Vec<&'a str>,
        st: &mut Vec<&'a str>,
    ) -> bool {
        use Formula::*;
        match (p, t) {
            (True, True) | (False, False) => true,
            (Atom(a, xs), Atom(b, ys)) => {
                a == b
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.term(x, y, sp, st))
            }
            (Equal(x1, x2), Equal(y1, y2)) => {
                self.term(x1, y1, sp, st) && self.term(x2, y2, sp, st)
            }
            (Not(x), Not(y)) => self.formula(x, y, sp, st),
            (And(x1, x2), And(y1, y2))
            | (Or(x1, x2), Or(y1, y2))
            | (Implies(x1, x2), Implies(y1, y2))
            | (Iff(x1, x2), Iff(y1, y2)) => {
                self.formula(x1, y1, sp, st) && self.formula(x2, y2, sp, st)
            }
            (Forall(x, a), Forall(y, b)) | (Exists(x, a), Exists(y, b)) => {
                sp.push(x);
                st.push(y);
                let r = self.formula(a, b, sp, st);
                sp.pop();
                st.pop();
                r
            }
            _ => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Printing

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Ascii,
    LatexMath,
}

const PREC_QUANT: u8 = 0;
const PREC_IFF: u8 = 1;
const PREC_IMPLIES: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_NOT: u8 = 5;
const PREC_ATOM: u8 = 6;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Forall(..) | Formula::Exists(..) => PREC_QUANT,
        Formula::Iff(..) => PREC_IFF,
        Formula::Implies(..) => PREC_IMPLIES,
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        Formula::Not(..) => PREC_NOT,
        _ => PREC_ATOM,
    }
}

/// An identifier in math mode: single letters bare, longer names set with
/// `\mathit` so they read as one word.
pub fn latex_ident(name: &str) -> String {
    if name.len() == 1 && name.as_bytes()[0].is_ascii_alphabetic() {
        name.to_string()
    } else {
        format!("\\mathit{{{}}}", escape_latex(name))
    }
}

struct Printer<'o> {
    style: Style,
    out: &'o mut String,
}

impl Printer<'_> {
    fn ident(&mut self, name: &str) {
        match self.style {
            Style::Ascii => self.out.push_str(name),
            Style::LatexMath => self.out.push_str(&latex_ident(name)),
        }
    }

    fn space(&mut self) {
        self.out.push_str(match self.style {
            Style::Ascii => " ",
            Style::LatexMath => "\\,",
        });
    }

    fn term(&mut self, t: &Term, argument: bool) {
        match t {
            Term::Var(v) => self.ident(v),
            Term::App(h, args) if args.is_empty() => self.ident(h),
            Term::App(h, args) => {
                if argument {
                    self.out.push('(');
                }
                self.ident(h);
                for a in args {
                    self.space();
                    self.term(a, true);
                }
                if argument {
                    self.out.push(')');
                }
            }
        }
    }

    fn binary(&mut self, prec: u8, a: &Formula, op: &str, b: &Formula, rightmost: bool) {
        let left_ctx = prec + 1;
        let right_ctx = if prec == PREC_IFF { PREC_IFF } else { prec };
        self.formula(a, left_ctx, false);
        self.out.push(' ');
        self.out.push_str(op);
        self.out.push(' ');
        self.formula(b, right_ctx, rightmost);
    }

    fn formula(&mut self, f: &Formula, ctx: u8, rightmost: bool) {
        let prec = precedence(f);
        let wrap = prec < ctx && (prec != PREC_QUANT || !rightmost);
        if wrap {
            self.out.push('(');
            self.bare(f, true);
            self.out.push(')');
        } else {
            self.bare(f, rightmost);
        }
    }

    fn bare(&mut self, f: &Formula, rightmost: bool) {
        let latex = self.style == Style::LatexMath;
        match f {
            Formula::True => self
                .out
                .push_str(if latex { "\\mathsf{True}" } else { "True" }),
            Formula::False => self
                .out
                .push_str(if latex { "\\mathsf{False}" } else { "False" }),
            Formula::Atom(p, args) => {
                self.ident(p);
                for a in args {
                    self.space();
                    self.term(a, true);
                }
            }
            Formula::Equal(a, b) => {
                self.term(a, false);
                self.out.push_str(" = ");
                self.term(b, false);
            }
            Formula::Not(a) => {
                self.out.push_str(if latex { "\\neg " } else { "~" });
                self.formula(a, PREC_NOT, rightmost);
            }
            Formula::And(a, b) => self.binary(
                PREC_AND,
                a,
                if latex { "\\wedge" } else { "/\\" },
                b,
                rightmost,
            ),
            Formula::Or(a, b) => self.binary(
                PREC_OR,
                a,
                if latex { "\\vee" } else { "\\/" },
                b,
                rightmost,
            ),
            Formula::Implies(a, b) => self.binary(
                PREC_IMPLIES,
                a,
                if latex { "\\rightarrow" } else { "->" },
                b,
                rightmost,
            ),
            Formula::Iff(a, b) => self.binary(
                PREC_IFF,
                a,
                if latex { "\\leftrightarrow" } else { "<->" },
                b,
                rightmost,
            ),
            Formula::Forall(..) | Formula::Exists(..) => {
                let universal = matches!(f, Formula::Forall(..));
                let mut binders = Vec::new();
                let mut body = f;
                loop {
                    match body {
                        Formula::Forall(x, b) if universal => {
                            binders.push(x.as_str());
                            body = b;
                        }
                        Formula::Exists(x, b) if !universal => {
                            binders.push(x.as_str());
                            body = b;
                        }
                        _ => break,
                    }
                }
                self.out.push_str(match (universal, latex) {
                    (true, false) => "forall ",
                    (false, false) => "exists ",
                    (true, true) => "\\forall ",
                    (false, true) => "\\exists ",
                });
                for (i, x) in binders.iter().enumerate() {
                    if i > 0 {
                        self.space();
                    }
                    self.ident(x);
                }
                self.out.push_str(if latex { ",\\; " } else { ", " });
                self.formula(body, PREC_QUANT, rightmost);
            }
        }
    }
}

/// Prints `f` with the minimal parentheses needed to parse back.
pub fn format_formula(f: &Formula, style: Style) -> String {
    let mut out = String::new();
    Printer {
        style,
        out: &mut out,
    }
    .formula(f, PREC_QUANT, true);
    out
}

/// Prints a term.
pub fn format_term(t: &Term, style: Style) -> String {
    let mut out = String::new();
    Printer {
        style,
        out: &mut out,
    }
    .term(t, false);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn a(n: &str) -> Formula {
        Formula::atom(n)
    }

    #[test]
    fn implication_is_right_associative() {
        assert_eq!(
            p("A -> B -> C"),
            Formula::implies(a("A"), Formula::implies(a("B"), a("C")))
        );
    }

    #[test]
    fn precedence_table() {
        assert_eq!(
            p("~A \\/ B /\\ C"),
            Formula::or(Formula::negate(a("A")), Formula::and(a("B"), a("C")))
        );
        assert_eq!(
            p("A /\\ B -> C <-> D"),
            Formula::iff(
                Formula::implies(Formula::and(a("A"), a("B")), a("C")),
                a("D")
            )
        );
    }

    #[test]
    fn quantifier_scope_extends_right() {
        let px = Formula::pred("P", vec![Term::var("x")]);
        let qx = Formula::pred("Q", vec![Term::var("x")]);
        assert_eq!(
            p("forall x, P x -> Q x"),
            Formula::forall("x", Formula::implies(px, qx))
        );
        assert_eq!(
            p("forall x y, R x y"),
            Formula::forall(
                "x",
                Formula::forall(
                    "y",
                    Formula::pred("R", vec![Term::var("x"), Term::var("y")])
                )
            )
        );
    }

    #[test]
    fn equality_and_application() {
        assert_eq!(
            p("f x = y"),
            Formula::Equal(Term::app("f", vec![Term::var("x")]), Term::var("y"))
        );
        assert_eq!(
            p("P (f (g x)) y"),
            Formula::pred(
                "P",
                vec![
                    Term::app("f", vec![Term::app("g", vec![Term::var("x")])]),
                    Term::var("y")
                ]
            )
        );
        assert_eq!(
            parse_term("(f x)").unwrap(),
            Term::app("f", vec![Term::var("x")])
        );
    }

    #[test]
    fn parse_errors_report_position() {
        let e = parse_formula("A -> ").unwrap_err();
        assert_eq!(e.pos, 5);
        assert!(e.expected.contains(&"identifier".to_string()));
        let e = parse_formula("A B )").unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(parse_formula("forall , A").is_err());
        assert!(parse_formula("A # B").is_err());
    }

    #[test]
    fn substitution_examples() {
        let px = p("P x");
        assert_eq!(substitute(&px, "x", &Term::var("a")), p("P a"));
        let all = p("forall x, P x");
        assert_eq!(substitute(&all, "x", &Term::var("a")), all);
        let ex = p("exists y, P x y");
        let fy = Term::app("f", vec![Term::var("y")]);
        let got = substitute(&ex, "x", &fy);
        assert_eq!(got, p("exists y', P (f y) y'"));
    }

    #[test]
    fn alpha_examples() {
        assert!(alpha_equal(&p("forall x, P x"), &p("forall y, P y")));
        assert!(!alpha_equal(&p("P x"), &p("P y")));
        assert!(!alpha_equal(&p("A -> A"), &p("A -> B")));
        assert!(!alpha_equal(&p("forall x, P x y"), &p("forall y, P y y")));
        assert!(alpha_equal(
            &p("forall x, exists y, R x y"),
            &p("forall a, exists b, R a b")
        ));
    }

    #[test]
    fn printing() {
        assert_eq!(format_formula(&p("A -> B"), Style::Ascii), "A -> B");
        assert_eq!(
            format_formula(&p("A /\\ B"), Style::LatexMath),
            "A \\wedge B"
        );
        assert_eq!(
            format_formula(&p("(A -> B) -> C"), Style::Ascii),
            "(A -> B) -> C"
        );
        assert_eq!(
            format_formula(&p("(A /\\ B) /\\ C"), Style::Ascii),
            "(A /\\ B) /\\ C"
        );
        assert_eq!(
            format_formula(&p("(forall x, P x) -> A /\\ forall y, Q y"), Style::Ascii),
            "(forall x, P x) -> A /\\ forall y, Q y"
        );
        assert_eq!(format_formula(&p("~(A \\/ B)"), Style::Ascii), "~(A \\/ B)");
        assert_eq!(
            format_formula(&p("forall x, H_1 x"), Style::LatexMath),
            "\\forall x,\\; \\mathit{H\\_1}\\,x"
        );
        assert_eq!(
            format_formula(&p("~A <-> B -> False"), Style::LatexMath),
            "\\neg A \\leftrightarrow B \\rightarrow \\mathsf{False}"
        );
    }

    #[test]
    fn matching_instantiates_pattern_vars() {
        let pat = p("P x");
        let m = match_formula(&pat, &p("P a"), &["x".into()]).unwrap();
        assert_eq!(m["x"], Term::var("a"));
        assert!(match_formula(&p("P x x"), &p("P a b"), &["x".into()]).is_none());
        // bound variables of the target may not escape
        assert!(
            match_formula(&p("forall y, R x y"), &p("forall z, R z z"), &["x".into()]).is_none()
        );
        assert!(match_formula(&p("Q"), &p("P"), &[]).is_none());
    }
}
