//! Abstract syntax, parser and printer for the ATL* fragment with epistemic operators.

use std::fmt;

use crate::game::{Agent, AgentSet};

use super::AtlError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prop {
    /// The runner is at the goal vertex.
    Goal,
    /// The runner is at the named vertex.
    At(String),
    /// The named edge is present.
    Edge(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    /// `<<C>>`: the coalition can enforce.
    Exists,
    /// `[[C]]`: the coalition cannot avoid.
    Forall,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateFormula {
    True,
    Prop(Prop),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Implies(Box<StateFormula>, Box<StateFormula>),
    Strategic {
        quantifier: Quantifier,
        coalition: AgentSet,
        path: Box<PathFormula>,
    },
    Knows(Agent, Box<StateFormula>),
    Everybody(AgentSet, Box<StateFormula>),
    Common(AgentSet, Box<StateFormula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathFormula {
    State(Box<StateFormula>),
    Not(Box<PathFormula>),
    And(Box<PathFormula>, Box<PathFormula>),
    Or(Box<PathFormula>, Box<PathFormula>),
    Implies(Box<PathFormula>, Box<PathFormula>),
    Next(Box<PathFormula>),
    Finally(Box<PathFormula>),
    Globally(Box<PathFormula>),
    Until(Box<PathFormula>, Box<PathFormula>),
    /// `φ U[k] ψ`: ψ exactly at position k, φ before.
    BoundedUntil(usize, Box<PathFormula>, Box<PathFormula>),
    /// `φ U[<=k] ψ`: ψ at some position j ≤ k, φ before.
    UntilWithin(usize, Box<PathFormula>, Box<PathFormula>),
    /// `F[<=k] ψ`: ψ at some position j ≤ k.
    FinallyWithin(usize, Box<PathFormula>),
}

impl StateFormula {
    pub fn goal() -> Self {
        StateFormula::Prop(Prop::Goal)
    }

    pub fn falsum() -> Self {
        StateFormula::negation(StateFormula::True)
    }

    pub fn negation(f: StateFormula) -> Self {
        StateFormula::Not(Box::new(f))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(coalition: AgentSet, path: PathFormula) -> Self {
        StateFormula::Strategic {
            quantifier: Quantifier::Exists,
            coalition,
            path: Box::new(path),
        }
    }

    pub fn forall(coalition: AgentSet, path: PathFormula) -> Self {
        StateFormula::Strategic {
            quantifier: Quantifier::Forall,
            coalition,
            path: Box::new(path),
        }
    }

    /// `<<>> X T`: the state has a successor.
    pub fn alive() -> Self {
        StateFormula::exists(AgentSet::EMPTY, PathFormula::next(PathFormula::truth()))
    }

    pub fn dead() -> Self {
        StateFormula::negation(StateFormula::alive())
    }

    pub fn has_epistemic(&self) -> bool {
        match self {
            StateFormula::True | StateFormula::Prop(_) => false,
            StateFormula::Not(a) => a.has_epistemic(),
            StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
                a.has_epistemic() || b.has_epistemic()
            }
            StateFormula::Strategic { path, .. } => path.has_epistemic(),
            StateFormula::Knows(..) | StateFormula::Everybody(..) | StateFormula::Common(..) => true,
        }
    }

    /// Every coalition and epistemic group mentioned, with the agents of each.
    pub fn agents(&self) -> AgentSet {
        match self {
            StateFormula::True | StateFormula::Prop(_) => AgentSet::EMPTY,
            StateFormula::Not(a) => a.agents(),
            StateFormula::And(a, b) | StateFormula::Or(a, b) | StateFormula::Implies(a, b) => {
                a.agents().union(b.agents())
            }
            StateFormula::Strategic { coalition, path, .. } => coalition.union(path.agents()),
            StateFormula::Knows(a, f) => AgentSet::single(*a).union(f.agents()),
            StateFormula::Everybody(g, f) | StateFormula::Common(g, f) => g.union(f.agents()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            StateFormula::Implies(..) => 0,
            StateFormula::Or(..) => 1,
            StateFormula::And(..) => 2,
            StateFormula::Strategic { .. } => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            StateFormula::True => f.write_str("T")?,
            StateFormula::Prop(p) => write!(f, "{p}")?,
            StateFormula::Not(a) => {
                f.write_str("!")?;
                a.fmt_prec(f, 4)?;
            }
            StateFormula::And(a, b) => binary(f, &**a, " & ", &**b, 2, 3)?,
            StateFormula::Or(a, b) => binary(f, &**a, " | ", &**b, 1, 2)?,
            StateFormula::Implies(a, b) => binary(f, &**a, " -> ", &**b, 1, 0)?,
            StateFormula::Strategic {
                quantifier,
                coalition,
                path,
            } => {
                match quantifier {
                    Quantifier::Exists => write!(f, "<<{coalition}>> ")?,
                    Quantifier::Forall => write!(f, "[[{coalition}]] ")?,
                }
                path.fmt_prec(f, 4)?;
            }
            StateFormula::Knows(a, g) => {
                write!(f, "K{{{a}}} ")?;
                g.fmt_prec(f, 4)?;
            }
            StateFormula::Everybody(c, g) => {
                write!(f, "E{{{c}}} ")?;
                g.fmt_prec(f, 4)?;
            }
            StateFormula::Common(c, g) => {
                write!(f, "C{{{c}}} ")?;
                g.fmt_prec(f, 4)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

trait Prec {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result;
}

impl Prec for StateFormula {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        StateFormula::fmt_prec(self, f, min)
    }
}

impl Prec for PathFormula {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        PathFormula::fmt_prec(self, f, min)
    }
}

fn binary<T: Prec>(f: &mut fmt::Formatter<'_>, a: &T, op: &str, b: &T, left: u8, right: u8) -> fmt::Result {
    a.fmt_prec(f, left)?;
    f.write_str(op)?;
    b.fmt_prec(f, right)
}

impl PathFormula {
    pub fn state(f: StateFormula) -> Self {
        PathFormula::State(Box::new(f))
    }

    pub fn truth() -> Self {
        PathFormula::state(StateFormula::True)
    }

    pub fn goal() -> Self {
        PathFormula::state(StateFormula::goal())
    }

    pub fn negation(f: PathFormula) -> Self {
        PathFormula::Not(Box::new(f))
    }

    pub fn next(f: PathFormula) -> Self {
        PathFormula::Next(Box::new(f))
    }

    pub fn finally(f: PathFormula) -> Self {
        PathFormula::Finally(Box::new(f))
    }

    pub fn globally(f: PathFormula) -> Self {
        PathFormula::Globally(Box::new(f))
    }

    pub fn until(a: PathFormula, b: PathFormula) -> Self {
        PathFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn bounded_until(k: usize, a: PathFormula, b: PathFormula) -> Self {
        PathFormula::BoundedUntil(k, Box::new(a), Box::new(b))
    }

    pub fn until_within(k: usize, a: PathFormula, b: PathFormula) -> Self {
        PathFormula::UntilWithin(k, Box::new(a), Box::new(b))
    }

    pub fn finally_within(k: usize, a: PathFormula) -> Self {
        PathFormula::FinallyWithin(k, Box::new(a))
    }

    pub fn has_epistemic(&self) -> bool {
        self.any_state(&StateFormula::has_epistemic)
    }

    fn agents(&self) -> AgentSet {
        let mut acc = AgentSet::EMPTY;
        self.visit_states(&mut |s| acc = acc.union(s.agents()));
        acc
    }

    fn any_state(&self, pred: &dyn Fn(&StateFormula) -> bool) -> bool {
        let mut found = false;
        self.visit_states(&mut |s| found |= pred(s));
        found
    }

    /// Calls `visit` on every maximal state subformula.
    pub fn visit_states(&self, visit: &mut dyn FnMut(&StateFormula)) {
        match self {
            PathFormula::State(s) => visit(s),
            PathFormula::Not(a)
            | PathFormula::Next(a)
            | PathFormula::Finally(a)
            | PathFormula::Globally(a)
            | PathFormula::FinallyWithin(_, a) => a.visit_states(visit),
            PathFormula::And(a, b)
            | PathFormula::Or(a, b)
            | PathFormula::Implies(a, b)
            | PathFormula::Until(a, b)
            | PathFormula::BoundedUntil(_, a, b)
            | PathFormula::UntilWithin(_, a, b) => {
                a.visit_states(visit);
                b.visit_states(visit);
            }
        }
    }

    /// Number of positions a play must be unrolled exactly for bounded operators and X.
    pub fn exact_horizon(&self) -> usize {
        match self {
            PathFormula::State(_) => 0,
            PathFormula::Not(a) | PathFormula::Finally(a) | PathFormula::Globally(a) => a.exact_horizon(),
            PathFormula::Next(a) => 1 + a.exact_horizon(),
            PathFormula::FinallyWithin(k, a) => k + a.exact_horizon(),
            PathFormula::And(a, b) | PathFormula::Or(a, b) | PathFormula::Implies(a, b) | PathFormula::Until(a, b) => {
                a.exact_horizon() + b.exact_horizon()
            }
            PathFormula::BoundedUntil(k, a, b) | PathFormula::UntilWithin(k, a, b) => {
                k + a.exact_horizon() + b.exact_horizon()
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            PathFormula::State(s) => s.precedence(),
            PathFormula::Implies(..) => 0,
            PathFormula::Or(..) => 1,
            PathFormula::And(..) => 2,
            PathFormula::Until(..) | PathFormula::BoundedUntil(..) | PathFormula::UntilWithin(..) => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if let PathFormula::State(s) = self {
            return s.fmt_prec(f, min);
        }
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            PathFormula::State(_) => unreachable!(),
            PathFormula::Not(a) => {
                f.write_str("!")?;
                a.fmt_prec(f, 4)?;
            }
            PathFormula::Next(a) => prefix(f, "X", a)?,
            PathFormula::Finally(a) => prefix(f, "F", a)?,
            PathFormula::Globally(a) => prefix(f, "G", a)?,
            PathFormula::FinallyWithin(k, a) => prefix(f, &format!("F[<={k}]"), a)?,
            PathFormula::And(a, b) => binary(f, a.as_ref(), " & ", b.as_ref(), 2, 3)?,
            PathFormula::Or(a, b) => binary(f, a.as_ref(), " | ", b.as_ref(), 1, 2)?,
            PathFormula::Implies(a, b) => binary(f, a.as_ref(), " -> ", b.as_ref(), 1, 0)?,
            PathFormula::Until(a, b) => binary(f, a.as_ref(), " U ", b.as_ref(), 4, 3)?,
            PathFormula::BoundedUntil(k, a, b) => binary(f, a.as_ref(), &format!(" U[{k}] "), b.as_ref(), 4, 3)?,
            PathFormula::UntilWithin(k, a, b) => binary(f, a.as_ref(), &format!(" U[<={k}] "), b.as_ref(), 4, 3)?,
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn prefix(f: &mut fmt::Formatter<'_>, op: &str, a: &PathFormula) -> fmt::Result {
    write!(f, "{op} ")?;
    a.fmt_prec(f, 4)
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::Goal => f.write_str("g"),
            Prop::At(v) => write!(f, "at({v})"),
            Prop::Edge(v, w) => write!(f, "edge({v},{w})"),
        }
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Untyped parse tree; split into state and path formulas afterwards.
#[derive(Debug, Clone)]
enum Expr {
    True,
    Prop(Prop),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Strategic(Quantifier, AgentSet, Box<Expr>),
    Knows(Agent, Box<Expr>),
    Everybody(AgentSet, Box<Expr>),
    Common(AgentSet, Box<Expr>),
    Next(Box<Expr>),
    Finally(Box<Expr>),
    Globally(Box<Expr>),
    FinallyWithin(usize, Box<Expr>),
    Until(Box<Expr>, Box<Expr>),
    BoundedUntil(usize, Box<Expr>, Box<Expr>),
    UntilWithin(usize, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    True,
    Goal,
    Ident(String),
    At(String),
    Edge(String, String),
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    Coalition(AgentSet),
    Dual(AgentSet),
    Knows(Agent),
    Everybody(AgentSet),
    Common(AgentSet),
    Next,
    Finally,
    Globally,
    FinallyWithin(usize),
    Until,
    BoundedUntil(usize),
    UntilWithin(usize),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier \"{s}\""),
            Tok::RParen => f.write_str("')'"),
            Tok::LParen => f.write_str("'('"),
            other => write!(f, "{other:?}"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn error(&self, pos: usize, msg: impl Into<String>) -> AtlError {
        AtlError::Syntax { pos, msg: msg.into() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, AtlError> {
        let mut out = Vec::new();
        loop {
            let trimmed = self.rest().trim_start();
            self.pos = self.src.len() - trimmed.len();
            if trimmed.is_empty() {
                return Ok(out);
            }
            let start = self.pos;
            let tok = self.token()?;
            match tok {
                Some(t) => out.push((start, t)),
                None => {
                    // A run of temporal letters like `GF` expands to several prefix operators.
                    let word = self.word();
                    for c in word.chars() {
                        out.push((
                            start,
                            match c {
                                'X' => Tok::Next,
                                'F' => Tok::Finally,
                                _ => Tok::Globally,
                            },
                        ));
                    }
                }
            }
        }
    }

    fn word(&mut self) -> &'a str {
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|(_, c)| !(c.is_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += len;
        &rest[..len]
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn token(&mut self) -> Result<Option<Tok>, AtlError> {
        let start = self.pos;
        for (sym, tok) in [
            ("->", Tok::Implies),
            ("!", Tok::Not),
            ("&", Tok::And),
            ("|", Tok::Or),
            ("(", Tok::LParen),
            (")", Tok::RParen),
        ] {
            if self.eat(sym) {
                return Ok(Some(tok));
            }
        }
        if self.eat("<<") {
            let c = self.agents_until(">>")?;
            return Ok(Some(Tok::Coalition(c)));
        }
        if self.eat("[[") {
            let c = self.agents_until("]]")?;
            return Ok(Some(Tok::Dual(c)));
        }
        let first = self.rest().chars().next().expect("non-empty input");
        if !(first.is_alphanumeric() || first == '_') {
            return Err(self.error(start, format!("unexpected character '{first}'")));
        }
        let save = self.pos;
        let word = self.word();
        let tok = match word {
            "T" => Tok::True,
            "g" => Tok::Goal,
            "at" => {
                let args = self.args(1)?;
                Tok::At(args[0].clone())
            }
            "edge" => {
                let args = self.args(2)?;
                Tok::Edge(args[0].clone(), args[1].clone())
            }
            "K" if self.rest().starts_with('{') => {
                let group = self.group()?;
                let mut it = group.iter();
                match (it.next(), it.next()) {
                    (Some(a), None) => Tok::Knows(a),
                    _ => return Err(self.error(start, "K{..} takes exactly one agent")),
                }
            }
            "E" if self.rest().starts_with('{') => Tok::Everybody(self.group()?),
            "C" if self.rest().starts_with('{') => Tok::Common(self.group()?),
            "U" => match self.bound()? {
                None => Tok::Until,
                Some((true, k)) => Tok::UntilWithin(k),
                Some((false, k)) => Tok::BoundedUntil(k),
            },
            "F" if self.rest().starts_with('[') => match self.bound()? {
                Some((true, k)) => Tok::FinallyWithin(k),
                _ => return Err(self.error(start, "F takes only an upper bound, as F[<=k]")),
            },
            w if !w.is_empty() && w.chars().all(|c| matches!(c, 'X' | 'F' | 'G')) => {
                self.pos = save;
                return Ok(None);
            }
            w => Tok::Ident(w.to_string()),
        };
        Ok(Some(tok))
    }

    /// Parses an optional `[k]` or `[<=k]` suffix.
    fn bound(&mut self) -> Result<Option<(bool, usize)>, AtlError> {
        if !self.eat("[") {
            return Ok(None);
        }
        let within = self.eat("<=");
        let start = self.pos;
        let digits = self.word();
        let k: usize = digits
            .parse()
            .map_err(|_| self.error(start, format!("expected a bound, found \"{digits}\"")))?;
        if !self.eat("]") {
            return Err(self.error(self.pos, "expected ']'"));
        }
        Ok(Some((within, k)))
    }

    fn args(&mut self, n: usize) -> Result<Vec<String>, AtlError> {
        if !self.eat("(") {
            return Err(self.error(self.pos, "expected '('"));
        }
        let close = self
            .rest()
            .find(')')
            .ok_or_else(|| self.error(self.pos, "expected ')'"))?;
        let inner = &self.rest()[..close];
        let parts: Vec<String> = inner.split(',').map(|p| p.trim().to_string()).collect();
        if parts.len() != n || parts.iter().any(String::is_empty) {
            return Err(self.error(self.pos, format!("expected {n} vertex name(s)")));
        }
        self.pos += close + 1;
        Ok(parts)
    }

    fn group(&mut self) -> Result<AgentSet, AtlError> {
        self.eat("{");
        self.agents_until("}")
    }

    fn agents_until(&mut self, close: &str) -> Result<AgentSet, AtlError> {
        let end = self
            .rest()
            .find(close)
            .ok_or_else(|| self.error(self.pos, format!("expected '{close}'")))?;
        let inner = &self.rest()[..end];
        let mut set = AgentSet::EMPTY;
        for name in inner.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let agent: Agent = name.parse().map_err(|_| AtlError::UnknownAgent(name.to_string()))?;
            set = set.with(agent);
        }
        self.pos += end + close.len();
        Ok(set)
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.len, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn implication(&mut self) -> Result<Expr, AtlError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Implies) {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Expr, AtlError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            lhs = Expr::Or(Box::new(lhs), Box::new(self.conjunction()?));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Expr, AtlError> {
        let mut lhs = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.bump();
            lhs = Expr::And(Box::new(lhs), Box::new(self.until()?));
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Expr, AtlError> {
        let lhs = self.unary()?;
        let wrap: fn(Box<Expr>, Box<Expr>, usize) -> Expr = match self.peek() {
            Some(Tok::Until) => |a, b, _| Expr::Until(a, b),
            Some(Tok::BoundedUntil(_)) => |a, b, k| Expr::BoundedUntil(k, a, b),
            Some(Tok::UntilWithin(_)) => |a, b, k| Expr::UntilWithin(k, a, b),
            _ => return Ok(lhs),
        };
        let k = match self.bump() {
            Some(Tok::BoundedUntil(k)) | Some(Tok::UntilWithin(k)) => k,
            _ => 0,
        };
        let rhs = self.until()?;
        Ok(wrap(Box::new(lhs), Box::new(rhs), k))
    }

    fn unary(&mut self) -> Result<Expr, AtlError> {
        let pos = self.pos();
        let Some(tok) = self.bump() else {
            return Err(AtlError::Syntax {
                pos,
                msg: "unexpected end of formula".into(),
            });
        };
        let boxed = |p: &mut Parser| p.unary().map(Box::new);
        Ok(match tok {
            Tok::True => Expr::True,
            Tok::Goal => Expr::Prop(Prop::Goal),
            Tok::At(v) => Expr::Prop(Prop::At(v)),
            Tok::Edge(v, w) => Expr::Prop(Prop::Edge(v, w)),
            Tok::Not => Expr::Not(boxed(self)?),
            Tok::Next => Expr::Next(boxed(self)?),
            Tok::Finally => Expr::Finally(boxed(self)?),
            Tok::Globally => Expr::Globally(boxed(self)?),
            Tok::FinallyWithin(k) => Expr::FinallyWithin(k, boxed(self)?),
            Tok::Knows(a) => Expr::Knows(a, boxed(self)?),
            Tok::Everybody(c) => Expr::Everybody(c, boxed(self)?),
            Tok::Common(c) => Expr::Common(c, boxed(self)?),
            Tok::Coalition(c) => Expr::Strategic(Quantifier::Exists, c, Box::new(self.until()?)),
            Tok::Dual(c) => Expr::Strategic(Quantifier::Forall, c, Box::new(self.until()?)),
            Tok::LParen => {
                let e = self.implication()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(AtlError::Syntax {
                        pos: self.pos(),
                        msg: "expected ')'".into(),
                    });
                }
                self.bump();
                e
            }
            Tok::Ident(w) => {
                return Err(AtlError::Syntax {
                    pos,
                    msg: format!("unknown identifier \"{w}\""),
                })
            }
            other => {
                return Err(AtlError::Syntax {
                    pos,
                    msg: format!("unexpected {other}"),
                })
            }
        })
    }
}

/// Parses a state formula in the surface syntax.
pub fn parse_formula(text: &str) -> Result<StateFormula, AtlError> {
    let toks = Lexer { src: text, pos: 0 }.tokens()?;
    let mut p = Parser {
        toks,
        at: 0,
        len: text.len(),
    };
    let e = p.implication()?;
    if p.at < p.toks.len() {
        return Err(AtlError::Syntax {
            pos: p.pos(),
            msg: format!("unexpected {}", p.toks[p.at].1),
        });
    }
    to_state(&e)
}

/// Parses a path formula, e.g. for evaluation on a concrete play.
pub fn parse_path(text: &str) -> Result<PathFormula, AtlError> {
    let toks = Lexer { src: text, pos: 0 }.tokens()?;
    let mut p = Parser {
        toks,
        at: 0,
        len: text.len(),
    };
    let e = p.implication()?;
    if p.at < p.toks.len() {
        return Err(AtlError::Syntax {
            pos: p.pos(),
            msg: format!("unexpected {}", p.toks[p.at].1),
        });
    }
    to_path(&e)
}

fn is_temporal(e: &Expr) -> bool {
    match e {
        Expr::True | Expr::Prop(_) => false,
        Expr::Strategic(..) | Expr::Knows(..) | Expr::Everybody(..) | Expr::Common(..) => false,
        Expr::Not(a) => is_temporal(a),
        Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => is_temporal(a) || is_temporal(b),
        _ => true,
    }
}

fn to_state(e: &Expr) -> Result<StateFormula, AtlError> {
    let b = |x: &Expr| to_state(x).map(Box::new);
    Ok(match e {
        Expr::True => StateFormula::True,
        Expr::Prop(p) => StateFormula::Prop(p.clone()),
        Expr::Not(a) => StateFormula::Not(b(a)?),
        Expr::And(x, y) => StateFormula::And(b(x)?, b(y)?),
        Expr::Or(x, y) => StateFormula::Or(b(x)?, b(y)?),
        Expr::Implies(x, y) => StateFormula::Implies(b(x)?, b(y)?),
        Expr::Strategic(q, c, p) => StateFormula::Strategic {
            quantifier: *q,
            coalition: *c,
            path: Box::new(to_path(p)?),
        },
        Expr::Knows(a, f) => StateFormula::Knows(*a, b(f)?),
        Expr::Everybody(c, f) => StateFormula::Everybody(*c, b(f)?),
        Expr::Common(c, f) => StateFormula::Common(*c, b(f)?),
        temporal => return Err(AtlError::TemporalOutsideCoalition(to_path(temporal)?.to_string())),
    })
}

fn to_path(e: &Expr) -> Result<PathFormula, AtlError> {
    if !is_temporal(e) {
        return Ok(PathFormula::state(to_state(e)?));
    }
    let b = |x: &Expr| to_path(x).map(Box::new);
    Ok(match e {
        Expr::Not(a) => PathFormula::Not(b(a)?),
        Expr::And(x, y) => PathFormula::And(b(x)?, b(y)?),
        Expr::Or(x, y) => PathFormula::Or(b(x)?, b(y)?),
        Expr::Implies(x, y) => PathFormula::Implies(b(x)?, b(y)?),
        Expr::Next(a) => PathFormula::Next(b(a)?),
        Expr::Finally(a) => PathFormula::Finally(b(a)?),
        Expr::Globally(a) => PathFormula::Globally(b(a)?),
        Expr::FinallyWithin(k, a) => PathFormula::FinallyWithin(*k, b(a)?),
        Expr::Until(x, y) => PathFormula::Until(b(x)?, b(y)?),
        Expr::BoundedUntil(k, x, y) => PathFormula::BoundedUntil(*k, b(x)?, b(y)?),
        Expr::UntilWithin(k, x, y) => PathFormula::UntilWithin(*k, b(x)?, b(y)?),
        _ => unreachable!("non-temporal expressions are handled above"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r() -> AgentSet {
        AgentSet::single(Agent::Runner)
    }

    #[test]
    fn parses_coalition_formulas() {
        assert_eq!(
            parse_formula("<<r>> F g").unwrap(),
            StateFormula::exists(r(), PathFormula::finally(PathFormula::goal()))
        );
        assert_eq!(
            parse_formula("<<r>> T U[4] (X T)").unwrap(),
            StateFormula::exists(
                r(),
                PathFormula::bounded_until(4, PathFormula::truth(), PathFormula::next(PathFormula::truth()))
            )
        );
        assert_eq!(
            parse_formula("[[r]] G !g").unwrap(),
            StateFormula::forall(
                r(),
                PathFormula::globally(PathFormula::state(StateFormula::negation(StateFormula::goal())))
            )
        );
        assert_eq!(
            parse_formula("<<r,d>> GF g").unwrap(),
            parse_formula("<<d, r>> G F g").unwrap()
        );
    }

    #[test]
    fn parses_propositions_and_epistemics() {
        let f = parse_formula("K{r} <<r>> F g & at(u) -> edge(u, vg)").unwrap();
        let expected = StateFormula::implies(
            StateFormula::and(
                StateFormula::Knows(
                    Agent::Runner,
                    Box::new(StateFormula::exists(r(), PathFormula::finally(PathFormula::goal()))),
                ),
                StateFormula::Prop(Prop::At("u".into())),
            ),
            StateFormula::Prop(Prop::Edge("u".into(), "vg".into())),
        );
        assert_eq!(f, expected);
        assert!(parse_formula("E{r,d} <<d>> G !g").unwrap().has_epistemic());
        assert!(parse_formula("C{r,d} T").is_ok());
        assert_eq!(
            parse_formula("<<>> G !g").unwrap(),
            StateFormula::exists(
                AgentSet::EMPTY,
                PathFormula::globally(PathFormula::state(StateFormula::negation(StateFormula::goal())))
            )
        );
    }

    #[test]
    fn bounded_eventually_forms() {
        let f = parse_formula("<<d>> !g U[<=6] (<<>> G !g)").unwrap();
        assert!(matches!(
            f,
            StateFormula::Strategic { ref path, .. } if matches!(**path, PathFormula::UntilWithin(6, _, _))
        ));
        let f = parse_formula("<<d>> F[<=4] g").unwrap();
        assert_eq!(f.to_string(), "<<d>> F[<=4] g");
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(parse_formula("<<r>> F"), Err(AtlError::Syntax { .. })));
        assert!(matches!(parse_formula("<<q>> F g"), Err(AtlError::UnknownAgent(_))));
        assert!(matches!(
            parse_formula("F g"),
            Err(AtlError::TemporalOutsideCoalition(_))
        ));
        assert!(matches!(parse_formula("<<r>> F g)"), Err(AtlError::Syntax { .. })));
        assert!(matches!(parse_formula("<<r>> F h"), Err(AtlError::Syntax { .. })));
        assert!(matches!(parse_formula("<<r>> U[x] g"), Err(AtlError::Syntax { .. })));
        let err = parse_formula("<<r>> F (g").unwrap_err();
        assert!(err.to_string().contains("offset"));
    }

    #[test]
    fn exact_horizon_counts_bounds_and_nexts() {
        let f = parse_path("T U[4] (X T)").unwrap();
        assert_eq!(f.exact_horizon(), 5);
        assert_eq!(parse_path("G F g").unwrap().exact_horizon(), 0);
    }

    fn arb_state() -> impl Strategy<Value = StateFormula> {
        let leaf = prop_oneof![
            Just(StateFormula::True),
            Just(StateFormula::goal()),
            Just(StateFormula::Prop(Prop::At("u".into()))),
            Just(StateFormula::Prop(Prop::Edge("u".into(), "v".into()))),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            let coalition = (0u8..8).prop_map(|bits| {
                Agent::ALL
                    .into_iter()
                    .filter(|a| bits & (1 << a.index()) != 0)
                    .collect::<AgentSet>()
            });
            let path = arb_path(inner.clone());
            prop_oneof![
                inner.clone().prop_map(StateFormula::negation),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| StateFormula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| StateFormula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| StateFormula::implies(a, b)),
                (coalition.clone(), path.clone()).prop_map(|(c, p)| StateFormula::exists(c, p)),
                (coalition.clone(), path).prop_map(|(c, p)| StateFormula::forall(c, p)),
                inner
                    .clone()
                    .prop_map(|f| StateFormula::Knows(Agent::Demon, Box::new(f))),
                (coalition, inner).prop_map(|(c, f)| StateFormula::Common(c, Box::new(f))),
            ]
        })
    }

    fn arb_path(
        state: impl Strategy<Value = StateFormula> + Clone + 'static,
    ) -> impl Strategy<Value = PathFormula> + Clone {
        let leaf = state.prop_map(PathFormula::state);
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(PathFormula::next),
                inner.clone().prop_map(PathFormula::finally),
                inner.clone().prop_map(PathFormula::globally),
                (0usize..5, inner.clone()).prop_map(|(k, a)| PathFormula::finally_within(k, a)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| PathFormula::until(a, b)),
                (0usize..5, inner.clone(), inner.clone()).prop_map(|(k, a, b)| PathFormula::bounded_until(k, a, b)),
                (0usize..5, inner.clone(), inner.clone()).prop_map(|(k, a, b)| PathFormula::until_within(k, a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| { PathFormula::And(Box::new(a), Box::new(b)) }),
                inner.prop_map(PathFormula::negation),
            ]
        })
    }

    /// Rebuilds the canonical split: boolean combinations of state formulas are state formulas.
    fn canonical(f: StateFormula) -> StateFormula {
        parse_formula(&f.to_string()).unwrap()
    }

    proptest! {
        #[test]
        fn display_round_trips(f in arb_state()) {
            let once = canonical(f);
            let text = once.to_string();
            prop_assert_eq!(parse_formula(&text).unwrap(), once, "{}", text);
        }
    }
}
