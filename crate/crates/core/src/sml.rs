//! Sabotage modal logic: formulas, sabotage models and their semantics.
//!
//! `<>`/`[]` quantify over relation successors of the current world;
//! `<#>`/`[#]` quantify over the models obtained by deleting one edge.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::game::State;
use crate::graph::{EdgeSet, Graph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmlProp {
    /// The runner's position.
    Runner,
    /// The goal vertex.
    Goal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SmlFormula {
    True,
    Prop(SmlProp),
    Not(Box<SmlFormula>),
    And(Box<SmlFormula>, Box<SmlFormula>),
    Or(Box<SmlFormula>, Box<SmlFormula>),
    Diamond(Box<SmlFormula>),
    Square(Box<SmlFormula>),
    SabotageDiamond(Box<SmlFormula>),
    SabotageSquare(Box<SmlFormula>),
}

impl SmlFormula {
    pub fn goal() -> Self {
        SmlFormula::Prop(SmlProp::Goal)
    }

    pub fn negation(f: SmlFormula) -> Self {
        SmlFormula::Not(Box::new(f))
    }

    pub fn and(a: SmlFormula, b: SmlFormula) -> Self {
        SmlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: SmlFormula, b: SmlFormula) -> Self {
        SmlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn diamond(f: SmlFormula) -> Self {
        SmlFormula::Diamond(Box::new(f))
    }

    pub fn square(f: SmlFormula) -> Self {
        SmlFormula::Square(Box::new(f))
    }

    pub fn sab_diamond(f: SmlFormula) -> Self {
        SmlFormula::SabotageDiamond(Box::new(f))
    }

    pub fn sab_square(f: SmlFormula) -> Self {
        SmlFormula::SabotageSquare(Box::new(f))
    }

    fn precedence(&self) -> u8 {
        match self {
            SmlFormula::Or(..) => 0,
            SmlFormula::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            SmlFormula::True => f.write_str("T")?,
            SmlFormula::Prop(SmlProp::Runner) => f.write_str("r")?,
            SmlFormula::Prop(SmlProp::Goal) => f.write_str("g")?,
            SmlFormula::Not(a) => unary(f, "!", a)?,
            SmlFormula::Diamond(a) => unary(f, "<>", a)?,
            SmlFormula::Square(a) => unary(f, "[]", a)?,
            SmlFormula::SabotageDiamond(a) => unary(f, "<#>", a)?,
            SmlFormula::SabotageSquare(a) => unary(f, "[#]", a)?,
            SmlFormula::And(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" & ")?;
                b.fmt_prec(f, 2)?;
            }
            SmlFormula::Or(a, b) => {
                a.fmt_prec(f, 0)?;
                f.write_str(" | ")?;
                b.fmt_prec(f, 1)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn unary(f: &mut fmt::Formatter<'_>, op: &str, a: &SmlFormula) -> fmt::Result {
    f.write_str(op)?;
    if !op.starts_with('!') {
        f.write_str(" ")?;
    }
    a.fmt_prec(f, 2)
}

impl fmt::Display for SmlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SmlError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown proposition \"{0}\" (expected r or g)")]
    UnknownProposition(String),
    #[error("world {0} is not a world of the model")]
    UnknownWorld(usize),
    #[error("the liveness family starts at b = 1")]
    ZeroBound,
}

/// Parses the ASCII surface syntax.
pub fn parse_sml(text: &str) -> Result<SmlFormula, SmlError> {
    let mut p = Parser { src: text, pos: 0 };
    let f = p.disjunction()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn error(&self, msg: &str) -> SmlError {
        SmlError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn disjunction(&mut self) -> Result<SmlFormula, SmlError> {
        let mut f = self.conjunction()?;
        while self.eat("|") {
            f = SmlFormula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<SmlFormula, SmlError> {
        let mut f = self.unary()?;
        while self.eat("&") {
            f = SmlFormula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<SmlFormula, SmlError> {
        if self.eat("!") {
            return Ok(SmlFormula::negation(self.unary()?));
        }
        if self.eat("<>") {
            return Ok(SmlFormula::diamond(self.unary()?));
        }
        if self.eat("[]") {
            return Ok(SmlFormula::square(self.unary()?));
        }
        if self.eat("<#>") {
            return Ok(SmlFormula::sab_diamond(self.unary()?));
        }
        if self.eat("[#]") {
            return Ok(SmlFormula::sab_square(self.unary()?));
        }
        if self.eat("(") {
            let f = self.disjunction()?;
            if !self.eat(")") {
                return Err(self.error("expected ')'"));
            }
            return Ok(f);
        }
        self.skip_ws();
        let word: String = self
            .rest()
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '_')
            .collect();
        if word.is_empty() {
            return Err(self.error("expected a formula"));
        }
        self.pos += word.len();
        match word.as_str() {
            "T" => Ok(SmlFormula::True),
            "r" => Ok(SmlFormula::Prop(SmlProp::Runner)),
            "g" => Ok(SmlFormula::Prop(SmlProp::Goal)),
            _ => Err(SmlError::UnknownProposition(word)),
        }
    }
}

/// A sabotage model `(W, R, Val)` with `Val(r) = {runner}` and `Val(g)` the goal, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SabotageModel {
    pub worlds: usize,
    pub pairs: Vec<(VertexId, VertexId)>,
    pub relation: EdgeSet,
    pub runner: VertexId,
    pub goal: Option<VertexId>,
}

/// The model of a game-state: worlds are vertices, the relation is the remaining edges.
pub fn model_of(graph: &Graph, state: &State, goal: Option<VertexId>) -> SabotageModel {
    SabotageModel {
        worlds: graph.vertex_count(),
        pairs: graph.edges().to_vec(),
        relation: state.edges,
        runner: state.position,
        goal,
    }
}

#[derive(Debug, Clone, Copy)]
enum Node {
    True,
    Prop(SmlProp),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Diamond(usize),
    Square(usize),
    SabDiamond(usize),
    SabSquare(usize),
}

/// Evaluator with a cache keyed on (edge subset, world, subformula).
struct Evaluator<'m> {
    model: &'m SabotageModel,
    nodes: Vec<Node>,
    memo: Option<HashMap<(u64, usize, usize), bool>>,
}

impl<'m> Evaluator<'m> {
    fn new(model: &'m SabotageModel, memoize: bool) -> Self {
        Evaluator {
            model,
            nodes: Vec::new(),
            memo: memoize.then(HashMap::new),
        }
    }

    fn intern(&mut self, f: &SmlFormula) -> usize {
        let node = match f {
            SmlFormula::True => Node::True,
            SmlFormula::Prop(p) => Node::Prop(*p),
            SmlFormula::Not(a) => Node::Not(self.intern(a)),
            SmlFormula::And(a, b) => {
                let (a, b) = (self.intern(a), self.intern(b));
                Node::And(a, b)
            }
            SmlFormula::Or(a, b) => {
                let (a, b) = (self.intern(a), self.intern(b));
                Node::Or(a, b)
            }
            SmlFormula::Diamond(a) => Node::Diamond(self.intern(a)),
            SmlFormula::Square(a) => Node::Square(self.intern(a)),
            SmlFormula::SabotageDiamond(a) => Node::SabDiamond(self.intern(a)),
            SmlFormula::SabotageSquare(a) => Node::SabSquare(self.intern(a)),
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn eval(&mut self, rel: EdgeSet, w: usize, id: usize) -> bool {
        let key = (rel.bits(), w, id);
        if let Some(&v) = self.memo.as_ref().and_then(|m| m.get(&key)) {
            return v;
        }
        let successors = |this: &Self| -> Vec<usize> {
            rel.iter()
                .filter(|e| this.model.pairs[e.0].0 .0 == w)
                .map(|e| this.model.pairs[e.0].1 .0)
                .collect()
        };
        let v = match self.nodes[id] {
            Node::True => true,
            Node::Prop(SmlProp::Runner) => self.model.runner.0 == w,
            Node::Prop(SmlProp::Goal) => self.model.goal.is_some_and(|g| g.0 == w),
            Node::Not(a) => !self.eval(rel, w, a),
            Node::And(a, b) => self.eval(rel, w, a) && self.eval(rel, w, b),
            Node::Or(a, b) => self.eval(rel, w, a) || self.eval(rel, w, b),
            Node::Diamond(a) => successors(self).into_iter().any(|u| self.eval(rel, u, a)),
            Node::Square(a) => successors(self).into_iter().all(|u| self.eval(rel, u, a)),
            Node::SabDiamond(a) => rel.iter().any(|e| self.eval(rel.without(e), w, a)),
            Node::SabSquare(a) => rel.iter().all(|e| self.eval(rel.without(e), w, a)),
        };
        if let Some(m) = self.memo.as_mut() {
            m.insert(key, v);
        }
        v
    }
}

/// Truth of `f` at `world`.
pub fn eval_sml(model: &SabotageModel, world: VertexId, f: &SmlFormula) -> Result<bool, SmlError> {
    eval_with(model, world, f, true)
}

/// Evaluation without the cache; exponential, kept for cross-checking.
pub fn eval_sml_uncached(model: &SabotageModel, world: VertexId, f: &SmlFormula) -> Result<bool, SmlError> {
    eval_with(model, world, f, false)
}

fn eval_with(model: &SabotageModel, world: VertexId, f: &SmlFormula, memoize: bool) -> Result<bool, SmlError> {
    if world.0 >= model.worlds {
        return Err(SmlError::UnknownWorld(world.0));
    }
    let mut ev = Evaluator::new(model, memoize);
    let root = ev.intern(f);
    Ok(ev.eval(model.relation, world.0, root))
}

/// The winning-condition families of the sabotage game variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RhoVariant {
    /// Runner alone reaches the goal against the demon.
    Eu,
    /// Runner and demon together reach the goal.
    Eh,
    /// Demon helps the runner reach the goal.
    Uh,
    /// Runner and demon together avoid the goal.
    Uu,
}

impl std::str::FromStr for RhoVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "EU" => Ok(RhoVariant::Eu),
            "EH" => Ok(RhoVariant::Eh),
            "UH" => Ok(RhoVariant::Uh),
            "UU" => Ok(RhoVariant::Uu),
            _ => Err(format!("unknown variant \"{s}\" (expected EU, EH, UH or UU)")),
        }
    }
}

/// `ρ_k` for the given variant, unrolled `k` times.
pub fn build_rho(k: usize, variant: RhoVariant) -> SmlFormula {
    let g = SmlFormula::goal;
    let mut f = match variant {
        RhoVariant::Uu => SmlFormula::negation(g()),
        _ => g(),
    };
    for _ in 0..k {
        f = match variant {
            RhoVariant::Eu => SmlFormula::or(g(), SmlFormula::diamond(SmlFormula::sab_square(f))),
            RhoVariant::Eh => SmlFormula::or(g(), SmlFormula::diamond(SmlFormula::sab_diamond(f))),
            RhoVariant::Uh => SmlFormula::or(
                g(),
                SmlFormula::and(
                    SmlFormula::diamond(SmlFormula::True),
                    SmlFormula::square(SmlFormula::sab_diamond(f)),
                ),
            ),
            RhoVariant::Uu => SmlFormula::or(
                SmlFormula::negation(g()),
                SmlFormula::diamond(SmlFormula::sab_diamond(f)),
            ),
        };
    }
    f
}

/// `γ_b`: the runner can make at least `b` moves whatever the demon deletes.
pub fn build_gamma(b: usize) -> Result<SmlFormula, SmlError> {
    if b == 0 {
        return Err(SmlError::ZeroBound);
    }
    let mut f = SmlFormula::diamond(SmlFormula::True);
    for _ in 1..b {
        f = SmlFormula::diamond(SmlFormula::sab_square(f));
    }
    Ok(f)
}
