//! Path formulas on concrete plays.
//!
//! Finite plays follow the finite-trace conventions: `X` is false at the last
//! position, `G` ranges over existing positions, and `φ U[k] ψ` is false when
//! position `k` does not exist. A lasso play continues from its last state
//! back to the loop start forever.

use crate::game::{Play, PlayEnd, State};

use super::formula::{PathFormula, StateFormula};
use super::AtlError;

/// A play as positions plus the successor of the last position, if any.
#[derive(Debug, Clone, Copy)]
pub struct Trace<'a> {
    pub states: &'a [State],
    pub loop_to: Option<usize>,
}

impl Trace<'_> {
    fn next(&self, i: usize) -> Option<usize> {
        if i + 1 < self.states.len() {
            Some(i + 1)
        } else {
            self.loop_to
        }
    }
}

/// Evaluator for state subformulas at a given state.
pub type LeafEval<'a> = dyn FnMut(&State, &StateFormula) -> Result<bool, AtlError> + 'a;

/// Truth of `f` at the first position of `play`.
pub fn eval_path(play: &Play, f: &PathFormula, leaf: &mut LeafEval<'_>) -> Result<bool, AtlError> {
    let loop_to = match play.end {
        PlayEnd::Maximal => None,
        PlayEnd::Lasso(l) => Some(l),
        PlayEnd::Truncated => return Err(AtlError::TruncatedPlay),
    };
    eval_trace(
        Trace {
            states: &play.states,
            loop_to,
        },
        f,
        leaf,
    )
}

pub fn eval_trace(trace: Trace<'_>, f: &PathFormula, leaf: &mut LeafEval<'_>) -> Result<bool, AtlError> {
    if trace.states.is_empty() {
        return Err(AtlError::Unsupported("empty play".into()));
    }
    Ok(truth(trace, f, leaf)?[0])
}

fn truth(t: Trace<'_>, f: &PathFormula, leaf: &mut LeafEval<'_>) -> Result<Vec<bool>, AtlError> {
    let n = t.states.len();
    Ok(match f {
        PathFormula::State(s) => t.states.iter().map(|st| leaf(st, s)).collect::<Result<_, _>>()?,
        PathFormula::Not(a) => truth(t, a, leaf)?.into_iter().map(|x| !x).collect(),
        PathFormula::And(a, b) => zip(truth(t, a, leaf)?, truth(t, b, leaf)?, |x, y| x && y),
        PathFormula::Or(a, b) => zip(truth(t, a, leaf)?, truth(t, b, leaf)?, |x, y| x || y),
        PathFormula::Implies(a, b) => zip(truth(t, a, leaf)?, truth(t, b, leaf)?, |x, y| !x || y),
        PathFormula::Next(a) => {
            let a = truth(t, a, leaf)?;
            (0..n).map(|i| t.next(i).is_some_and(|j| a[j])).collect()
        }
        PathFormula::Finally(a) => {
            let a = truth(t, a, leaf)?;
            until(t, &vec![true; n], &a)
        }
        PathFormula::Until(a, b) => {
            let (a, b) = (truth(t, a, leaf)?, truth(t, b, leaf)?);
            until(t, &a, &b)
        }
        PathFormula::Globally(a) => {
            let a = truth(t, a, leaf)?;
            let mut g = vec![true; n];
            loop {
                let mut changed = false;
                for i in (0..n).rev() {
                    let v = a[i] && t.next(i).is_none_or(|j| g[j]);
                    if v != g[i] {
                        g[i] = v;
                        changed = true;
                    }
                }
                if !changed {
                    break g;
                }
            }
        }
        PathFormula::BoundedUntil(k, a, b) => {
            let (a, b) = (truth(t, a, leaf)?, truth(t, b, leaf)?);
            (0..n).map(|i| exactly(t, i, *k, &a, &b)).collect()
        }
        PathFormula::UntilWithin(k, a, b) => {
            let (a, b) = (truth(t, a, leaf)?, truth(t, b, leaf)?);
            (0..n).map(|i| within(t, i, *k, &a, &b)).collect()
        }
        PathFormula::FinallyWithin(k, b) => {
            let b = truth(t, b, leaf)?;
            (0..n).map(|i| within(t, i, *k, &vec![true; n], &b)).collect()
        }
    })
}

/// Truth of `f` on every continuation of a finite prefix whose last state has
/// successors: `Some(v)` when all continuations agree, `None` otherwise.
pub fn eval_prefix(states: &[State], f: &PathFormula, leaf: &mut LeafEval<'_>) -> Result<Option<bool>, AtlError> {
    if states.is_empty() {
        return Err(AtlError::Unsupported("empty play".into()));
    }
    Ok(kleene(states, f, leaf)?[0])
}

type Tri = Option<bool>;

fn and3(a: Tri, b: Tri) -> Tri {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: Tri, b: Tri) -> Tri {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

fn kleene(states: &[State], f: &PathFormula, leaf: &mut LeafEval<'_>) -> Result<Vec<Tri>, AtlError> {
    let n = states.len();
    let next = |v: &[Tri], i: usize| if i + 1 < n { v[i + 1] } else { None };
    Ok(match f {
        PathFormula::State(s) => states
            .iter()
            .map(|st| leaf(st, s).map(Some))
            .collect::<Result<_, _>>()?,
        PathFormula::Not(a) => kleene(states, a, leaf)?.into_iter().map(|x| x.map(|b| !b)).collect(),
        PathFormula::And(a, b) => {
            let (a, b) = (kleene(states, a, leaf)?, kleene(states, b, leaf)?);
            a.into_iter().zip(b).map(|(x, y)| and3(x, y)).collect()
        }
        PathFormula::Or(a, b) => {
            let (a, b) = (kleene(states, a, leaf)?, kleene(states, b, leaf)?);
            a.into_iter().zip(b).map(|(x, y)| or3(x, y)).collect()
        }
        PathFormula::Implies(a, b) => {
            let (a, b) = (kleene(states, a, leaf)?, kleene(states, b, leaf)?);
            a.into_iter().zip(b).map(|(x, y)| or3(x.map(|v| !v), y)).collect()
        }
        PathFormula::Next(a) => {
            let a = kleene(states, a, leaf)?;
            (0..n).map(|i| next(&a, i)).collect()
        }
        PathFormula::Finally(a) => {
            let a = kleene(states, a, leaf)?;
            backward(n, |i, later| or3(a[i], later))
        }
        PathFormula::Until(a, b) => {
            let (a, b) = (kleene(states, a, leaf)?, kleene(states, b, leaf)?);
            backward(n, |i, later| or3(b[i], and3(a[i], later)))
        }
        PathFormula::Globally(a) => {
            let a = kleene(states, a, leaf)?;
            backward(n, |i, later| and3(a[i], later))
        }
        PathFormula::BoundedUntil(k, a, b) => {
            let (a, b) = (kleene(states, a, leaf)?, kleene(states, b, leaf)?);
            (0..n).map(|i| bounded3(i, *k, n, &a, &b, false)).collect()
        }
        PathFormula::UntilWithin(k, a, b) => {
            let (a, b) = (kleene(states, a, leaf)?, kleene(states, b, leaf)?);
            (0..n).map(|i| bounded3(i, *k, n, &a, &b, true)).collect()
        }
        PathFormula::FinallyWithin(k, b) => {
            let b = kleene(states, b, leaf)?;
            let a = vec![Some(true); n];
            (0..n).map(|i| bounded3(i, *k, n, &a, &b, true)).collect()
        }
    })
}

/// Backward recurrence whose value past the prefix is unknown.
fn backward(n: usize, step: impl Fn(usize, Tri) -> Tri) -> Vec<Tri> {
    let mut out = vec![None; n];
    let mut later = None;
    for i in (0..n).rev() {
        out[i] = step(i, later);
        later = out[i];
    }
    out
}

/// `a U[k] b` (exact) or `a U[<=k] b` (within) from `start` on a prefix.
fn bounded3(start: usize, k: usize, n: usize, a: &[Tri], b: &[Tri], within: bool) -> Tri {
    // Value of the obligation from offset `step`, combined right to left.
    let mut acc: Tri = None;
    let last = start + k;
    let reach = last.min(n.saturating_sub(1));
    if last < n {
        acc = b[last];
    }
    for i in (start..=reach).rev() {
        if i == last {
            continue;
        }
        acc = if within {
            or3(b[i], and3(a[i], acc))
        } else {
            and3(a[i], acc)
        };
    }
    acc
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

fn until(t: Trace<'_>, a: &[bool], b: &[bool]) -> Vec<bool> {
    let n = a.len();
    let mut u = vec![false; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let v = b[i] || (a[i] && t.next(i).is_some_and(|j| u[j]));
            if v != u[i] {
                u[i] = v;
                changed = true;
            }
        }
        if !changed {
            return u;
        }
    }
}

fn exactly(t: Trace<'_>, start: usize, k: usize, a: &[bool], b: &[bool]) -> bool {
    let mut i = start;
    for _ in 0..k {
        if !a[i] {
            return false;
        }
        match t.next(i) {
            Some(j) => i = j,
            None => return false,
        }
    }
    b[i]
}

fn within(t: Trace<'_>, start: usize, k: usize, a: &[bool], b: &[bool]) -> bool {
    let mut i = start;
    for step in 0..=k {
        if b[i] {
            return true;
        }
        if step == k || !a[i] {
            return false;
        }
        match t.next(i) {
            Some(j) => i = j,
            None => return false,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atl::formula::{parse_path, Prop};
    use crate::game::{Arena, StructureKind};
    use crate::graph::Graph;

    fn props<'a>(
        arena: &'a Arena,
        goal: Option<&str>,
    ) -> impl FnMut(&State, &StateFormula) -> Result<bool, AtlError> + 'a {
        let goal = goal.map(|g| arena.graph().vertex(g).unwrap());
        move |s, f| simple(arena, goal, s, f)
    }

    fn simple(
        arena: &Arena,
        goal: Option<crate::graph::VertexId>,
        s: &State,
        f: &StateFormula,
    ) -> Result<bool, AtlError> {
        Ok(match f {
            StateFormula::True => true,
            StateFormula::Prop(Prop::Goal) => goal == Some(s.position),
            StateFormula::Prop(Prop::At(v)) => arena.graph().vertex(v)? == s.position,
            StateFormula::Not(a) => !simple(arena, goal, s, a)?,
            StateFormula::And(a, b) => simple(arena, goal, s, a)? && simple(arena, goal, s, b)?,
            _ => return Err(AtlError::Unsupported(f.to_string())),
        })
    }

    fn triangle() -> Arena {
        let g = Graph::from_pairs(&["0", "1", "2"], &[("0", "1"), ("0", "2"), ("1", "2")], "0", None).unwrap();
        Arena::new(StructureKind::Con, g).unwrap()
    }

    #[test]
    fn strong_next_at_a_dead_end() {
        let a = triangle();
        let s = a.parse_state("({},1)").unwrap();
        let play = Play {
            states: vec![s],
            profiles: vec![],
            end: PlayEnd::Maximal,
        };
        let mut leaf = props(&a, None);
        assert!(!eval_path(&play, &parse_path("X T").unwrap(), &mut leaf).unwrap());
        assert!(eval_path(&play, &parse_path("G T").unwrap(), &mut leaf).unwrap());
        assert!(!eval_path(&play, &parse_path("T U[1] T").unwrap(), &mut leaf).unwrap());
        assert!(eval_path(&play, &parse_path("T U[0] T").unwrap(), &mut leaf).unwrap());
    }

    #[test]
    fn concurrent_example_play() {
        let a = triangle();
        let states = vec![
            a.initial_state(),
            a.parse_state("({(0,1),(1,2)},1)").unwrap(),
            a.parse_state("({(1,2)},2)").unwrap(),
        ];
        let play = Play {
            states: states.clone(),
            profiles: vec![],
            end: PlayEnd::Maximal,
        };
        let mut leaf = props(&a, None);
        assert!(eval_path(&play, &parse_path("F at(2)").unwrap(), &mut leaf).unwrap());
        let suffix = Play {
            states: states[2..].to_vec(),
            profiles: vec![],
            end: PlayEnd::Maximal,
        };
        assert!(!eval_path(&suffix, &parse_path("X T").unwrap(), &mut leaf).unwrap());
        assert!(eval_path(&play, &parse_path("T U[2] at(2)").unwrap(), &mut leaf).unwrap());
        assert!(!eval_path(&play, &parse_path("T U[1] at(2)").unwrap(), &mut leaf).unwrap());
        assert!(eval_path(&play, &parse_path("T U[<=3] at(2)").unwrap(), &mut leaf).unwrap());
        assert!(!eval_path(&play, &parse_path("F[<=1] at(2)").unwrap(), &mut leaf).unwrap());
    }

    #[test]
    fn lasso_plays_repeat_forever() {
        let g = Graph::from_pairs(&["v0", "vg"], &[("v0", "vg")], "v0", Some("vg")).unwrap();
        let a = Arena::new(StructureKind::Con, g).unwrap();
        let play = Play {
            states: vec![a.initial_state()],
            profiles: vec![],
            end: PlayEnd::Lasso(0),
        };
        let mut leaf = props(&a, Some("vg"));
        assert!(eval_path(&play, &parse_path("G X T").unwrap(), &mut leaf).unwrap());
        assert!(!eval_path(&play, &parse_path("F g").unwrap(), &mut leaf).unwrap());
        assert!(eval_path(&play, &parse_path("T U[7] !g").unwrap(), &mut leaf).unwrap());
        let truncated = Play {
            end: PlayEnd::Truncated,
            ..play
        };
        assert_eq!(
            eval_path(&truncated, &parse_path("F g").unwrap(), &mut leaf).unwrap_err(),
            AtlError::TruncatedPlay
        );
    }

    #[test]
    fn liveness_patterns_on_lassos() {
        let g = Graph::from_pairs(&["0", "1"], &[("0", "1"), ("1", "0")], "0", Some("1")).unwrap();
        let a = Arena::new(StructureKind::Con, g).unwrap();
        let s0 = a.initial_state();
        let s1 = State {
            position: a.graph().vertex("1").unwrap(),
            ..s0
        };
        let mut leaf = props(&a, Some("1"));
        let alternating = Play {
            states: vec![s0, s1],
            profiles: vec![],
            end: PlayEnd::Lasso(0),
        };
        assert!(eval_path(&alternating, &parse_path("G F g").unwrap(), &mut leaf).unwrap());
        assert!(!eval_path(&alternating, &parse_path("F G g").unwrap(), &mut leaf).unwrap());
        let settles = Play {
            states: vec![s0, s1],
            profiles: vec![],
            end: PlayEnd::Lasso(1),
        };
        assert!(eval_path(&settles, &parse_path("F G g").unwrap(), &mut leaf).unwrap());
    }
}
