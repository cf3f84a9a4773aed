//! Rewriting into the checkable core.
//!
//! After normalization every coalition operator is `<<C>>` applied to one of
//! `X φ`, `F φ`, `G φ`, `φ U ψ`, `φ U[k] ψ`, `φ U[<=k] ψ`, `G F φ`, `F G φ`
//! with state-formula operands. `[[C]]γ` becomes `!<<C>>!γ`, negations are
//! pushed through temporal operators, state-formula conjuncts and disjuncts
//! are pulled out of coalitions, and a nested `X T` becomes `<<>> X T`.

use super::formula::{PathFormula, Quantifier, StateFormula};
use super::AtlError;
use crate::game::AgentSet;

/// Path formula in negation normal form with state-formula leaves.
#[derive(Debug, Clone)]
enum Nnf {
    Leaf(StateFormula),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Finally(Box<Nnf>),
    Globally(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    BoundedUntil(usize, Box<Nnf>, Box<Nnf>),
    UntilWithin(usize, Box<Nnf>, Box<Nnf>),
}

impl Nnf {
    fn to_path(&self) -> PathFormula {
        let b = |n: &Nnf| Box::new(n.to_path());
        match self {
            Nnf::Leaf(s) => PathFormula::state(s.clone()),
            Nnf::And(x, y) => PathFormula::And(b(x), b(y)),
            Nnf::Or(x, y) => PathFormula::Or(b(x), b(y)),
            Nnf::Next(x) => PathFormula::Next(b(x)),
            Nnf::Finally(x) => PathFormula::Finally(b(x)),
            Nnf::Globally(x) => PathFormula::Globally(b(x)),
            Nnf::Until(x, y) => PathFormula::Until(b(x), b(y)),
            Nnf::BoundedUntil(k, x, y) => PathFormula::BoundedUntil(*k, b(x), b(y)),
            Nnf::UntilWithin(k, x, y) => PathFormula::UntilWithin(*k, b(x), b(y)),
        }
    }
}

/// Negation that cancels double negations.
pub fn negate(f: StateFormula) -> StateFormula {
    match f {
        StateFormula::Not(inner) => *inner,
        other => StateFormula::negation(other),
    }
}

fn unsupported(p: &PathFormula) -> AtlError {
    AtlError::UnsupportedNesting(p.to_string())
}

/// Rewrites a state formula into the checkable core.
pub fn normalize(f: &StateFormula) -> Result<StateFormula, AtlError> {
    let b = |x: &StateFormula| normalize(x).map(Box::new);
    Ok(match f {
        StateFormula::True | StateFormula::Prop(_) => f.clone(),
        StateFormula::Not(a) => negate(normalize(a)?),
        StateFormula::And(x, y) => StateFormula::And(b(x)?, b(y)?),
        StateFormula::Or(x, y) => StateFormula::Or(b(x)?, b(y)?),
        StateFormula::Implies(x, y) => StateFormula::Implies(b(x)?, b(y)?),
        StateFormula::Knows(a, x) => StateFormula::Knows(*a, b(x)?),
        StateFormula::Everybody(c, x) => StateFormula::Everybody(*c, b(x)?),
        StateFormula::Common(c, x) => StateFormula::Common(*c, b(x)?),
        StateFormula::Strategic {
            quantifier,
            coalition,
            path,
        } => match quantifier {
            Quantifier::Exists => core(*coalition, nnf(path, false)?)?,
            Quantifier::Forall => negate(core(*coalition, nnf(path, true)?)?),
        },
    })
}

fn nnf(p: &PathFormula, neg: bool) -> Result<Nnf, AtlError> {
    let bx = |q: &PathFormula, n: bool| nnf(q, n).map(Box::new);
    Ok(match p {
        PathFormula::State(s) => {
            let s = normalize(s)?;
            Nnf::Leaf(if neg { negate(s) } else { s })
        }
        PathFormula::Not(a) => nnf(a, !neg)?,
        PathFormula::And(a, b) if neg => Nnf::Or(bx(a, true)?, bx(b, true)?),
        PathFormula::And(a, b) => Nnf::And(bx(a, false)?, bx(b, false)?),
        PathFormula::Or(a, b) if neg => Nnf::And(bx(a, true)?, bx(b, true)?),
        PathFormula::Or(a, b) => Nnf::Or(bx(a, false)?, bx(b, false)?),
        PathFormula::Implies(a, b) if neg => Nnf::And(bx(a, false)?, bx(b, true)?),
        PathFormula::Implies(a, b) => Nnf::Or(bx(a, true)?, bx(b, false)?),
        // Strong next: !X a holds at the last position, or where X !a holds.
        PathFormula::Next(a) if neg => Nnf::Or(
            Box::new(Nnf::Leaf(StateFormula::dead())),
            Box::new(Nnf::Next(bx(a, true)?)),
        ),
        PathFormula::Next(a) => Nnf::Next(bx(a, false)?),
        PathFormula::Finally(a) if neg => Nnf::Globally(bx(a, true)?),
        PathFormula::Finally(a) => Nnf::Finally(bx(a, false)?),
        PathFormula::Globally(a) if neg => Nnf::Finally(bx(a, true)?),
        PathFormula::Globally(a) => Nnf::Globally(bx(a, false)?),
        _ if neg => return Err(unsupported(&PathFormula::negation(p.clone()))),
        PathFormula::Until(a, b) => Nnf::Until(bx(a, false)?, bx(b, false)?),
        PathFormula::BoundedUntil(k, a, b) => Nnf::BoundedUntil(*k, bx(a, false)?, bx(b, false)?),
        PathFormula::UntilWithin(k, a, b) => Nnf::UntilWithin(*k, bx(a, false)?, bx(b, false)?),
        PathFormula::FinallyWithin(k, a) => {
            Nnf::UntilWithin(*k, Box::new(Nnf::Leaf(StateFormula::True)), bx(a, false)?)
        }
    })
}

/// The state formula equivalent to a path formula, when it is state-determined.
fn leaf(n: &Nnf) -> Option<StateFormula> {
    match n {
        Nnf::Leaf(s) => Some(s.clone()),
        Nnf::And(a, b) => Some(match (leaf(a)?, leaf(b)?) {
            (StateFormula::True, x) | (x, StateFormula::True) => x,
            (x, y) => StateFormula::and(x, y),
        }),
        Nnf::Or(a, b) => Some(match (leaf(a)?, leaf(b)?) {
            (x, y) if x == StateFormula::falsum() => y,
            (x, y) if y == StateFormula::falsum() => x,
            (x, y) => StateFormula::or(x, y),
        }),
        Nnf::Next(a) => match a.as_ref() {
            Nnf::Leaf(StateFormula::True) => Some(StateFormula::alive()),
            Nnf::Leaf(s) if *s == StateFormula::falsum() => Some(StateFormula::falsum()),
            _ => None,
        },
        _ => None,
    }
}

fn operand(n: &Nnf, whole: &Nnf) -> Result<PathFormula, AtlError> {
    leaf(n)
        .map(PathFormula::state)
        .ok_or_else(|| unsupported(&whole.to_path()))
}

fn exists(c: AgentSet, p: PathFormula) -> StateFormula {
    StateFormula::exists(c, p)
}

fn core(c: AgentSet, n: Nnf) -> Result<StateFormula, AtlError> {
    if let Some(s) = leaf(&n) {
        return Ok(s);
    }
    match &n {
        Nnf::And(a, b) => match (leaf(a), leaf(b)) {
            (Some(s), _) => Ok(StateFormula::and(s, core(c, (**b).clone())?)),
            (_, Some(s)) => Ok(StateFormula::and(core(c, (**a).clone())?, s)),
            _ => Err(unsupported(&n.to_path())),
        },
        Nnf::Or(a, b) => match (leaf(a), leaf(b)) {
            (Some(s), _) => Ok(StateFormula::or(s, core(c, (**b).clone())?)),
            (_, Some(s)) => Ok(StateFormula::or(core(c, (**a).clone())?, s)),
            _ => Err(unsupported(&n.to_path())),
        },
        Nnf::Next(a) => Ok(exists(c, PathFormula::next(operand(a, &n)?))),
        Nnf::Finally(a) => match a.as_ref() {
            Nnf::Finally(_) => core(c, (**a).clone()),
            Nnf::Globally(b) if leaf(b).is_some() => {
                Ok(exists(c, PathFormula::finally(PathFormula::globally(operand(b, &n)?))))
            }
            _ => Ok(exists(c, PathFormula::finally(operand(a, &n)?))),
        },
        Nnf::Globally(a) => match a.as_ref() {
            Nnf::Globally(_) => core(c, (**a).clone()),
            Nnf::Finally(b) if leaf(b).is_some() => {
                Ok(exists(c, PathFormula::globally(PathFormula::finally(operand(b, &n)?))))
            }
            _ => Ok(exists(c, PathFormula::globally(operand(a, &n)?))),
        },
        Nnf::Until(a, b) => Ok(exists(c, PathFormula::until(operand(a, &n)?, operand(b, &n)?))),
        Nnf::BoundedUntil(k, a, b) => Ok(exists(
            c,
            PathFormula::bounded_until(*k, operand(a, &n)?, operand(b, &n)?),
        )),
        Nnf::UntilWithin(k, a, b) => Ok(exists(
            c,
            PathFormula::until_within(*k, operand(a, &n)?, operand(b, &n)?),
        )),
        Nnf::Leaf(_) => unreachable!("leaves are handled above"),
    }
}
