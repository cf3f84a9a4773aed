//! Brute-force checking by lazy search over positional strategies.
//!
//! Choices are fixed per (agent, key) the first time a play needs them and
//! revised by backtracking. Plays are unrolled exactly for the formula's
//! horizon; afterwards a play is closed into a lasso at the latest earlier
//! occurrence of a repeated state. Violations are found on lassos whose loop
//! is a single cycle, which covers every path formula the solver accepts.

use std::cell::Cell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::game::{Action, Agent, AgentSet, Arena, State};

use super::formula::{PathFormula, Quantifier, StateFormula};
use super::label::Atom;
use super::path::{eval_prefix, eval_trace, LeafEval, Trace};
use super::strategy::StrategyTable;
use super::{AtlError, GameModel};

/// Default number of play-prefix expansions allowed per check.
pub const DEFAULT_BUDGET: usize = 2_000_000;

struct Node {
    state: State,
    depth: usize,
    parent: Option<Rc<Node>>,
}

impl Node {
    fn states(&self) -> Vec<State> {
        let mut out = Vec::with_capacity(self.depth + 1);
        let mut cur = Some(self);
        while let Some(n) = cur {
            out.push(n.state);
            cur = n.parent.as_deref();
        }
        out.reverse();
        out
    }
}

/// Search problem: a coalition trying to force a path formula from every root.
pub struct StrategySearch<'a> {
    pub arena: &'a Arena,
    pub coalition: AgentSet,
    pub path: &'a PathFormula,
    /// Maps a state to the representative sharing the agent's choice.
    pub key: &'a dyn Fn(Agent, &State) -> State,
    pub budget: usize,
}

struct Run<'a, 'b> {
    search: &'b StrategySearch<'a>,
    leaf: &'b mut LeafEval<'a>,
    assign: BTreeMap<(Agent, State), Action>,
    horizon: usize,
    used: &'b Cell<usize>,
}

impl<'a> StrategySearch<'a> {
    /// A strategy table witnessing the coalition's win, or `None`.
    /// `used` accumulates expansions across calls sharing one budget.
    pub fn run(
        &self,
        roots: &[State],
        leaf: &mut LeafEval<'a>,
        used: &Cell<usize>,
    ) -> Result<Option<StrategyTable>, AtlError> {
        let mut run = Run {
            search: self,
            leaf,
            assign: BTreeMap::new(),
            horizon: self.path.exact_horizon() + 1,
            used,
        };
        let mut pending: Vec<Rc<Node>> = roots
            .iter()
            .map(|&state| {
                Rc::new(Node {
                    state,
                    depth: 0,
                    parent: None,
                })
            })
            .collect();
        pending.reverse();
        if run.solve(&mut pending)? {
            let mut table = StrategyTable::new();
            for ((agent, key), action) in &run.assign {
                table.insert(*agent, *key, *action);
            }
            Ok(Some(table))
        } else {
            Ok(None)
        }
    }
}

impl Run<'_, '_> {
    fn solve(&mut self, pending: &mut Vec<Rc<Node>>) -> Result<bool, AtlError> {
        let arena = self.search.arena;
        while let Some(node) = pending.pop() {
            let s = node.state;
            let succ = arena.successors(&s);
            self.used.set(self.used.get() + 1);
            if self.used.get() > self.search.budget {
                return Err(AtlError::Resource {
                    what: "strategy search expansions".into(),
                    used: self.used.get(),
                    budget: self.search.budget,
                });
            }
            let states = node.states();
            if succ.is_empty() {
                if !self.holds(&states, None)? {
                    return Ok(false);
                }
                continue;
            }
            match eval_prefix(&states, self.search.path, self.leaf)? {
                Some(true) => continue,
                Some(false) => return Ok(false),
                None => {}
            }
            let open = self.search.coalition.iter().find_map(|agent| {
                let key = (self.search.key)(agent, &s);
                (!self.assign.contains_key(&(agent, key))).then_some((agent, key))
            });
            if let Some((agent, key)) = open {
                for action in arena.actions_unchecked(&s, agent) {
                    self.assign.insert((agent, key), action);
                    let mut branch = pending.clone();
                    branch.push(node.clone());
                    if self.solve(&mut branch)? {
                        return Ok(true);
                    }
                }
                self.assign.remove(&(agent, key));
                return Ok(false);
            }
            let mut seen = Vec::new();
            for (p, t) in succ {
                let consistent = self.search.coalition.iter().all(|agent| {
                    let key = (self.search.key)(agent, &s);
                    self.assign.get(&(agent, key)) == Some(&p.get(agent))
                });
                if !consistent || seen.contains(&t) {
                    continue;
                }
                seen.push(t);
                let depth = node.depth + 1;
                if depth >= self.horizon {
                    if let Some(loop_to) = states.iter().rposition(|x| *x == t) {
                        if !self.holds(&states, Some(loop_to))? {
                            return Ok(false);
                        }
                        continue;
                    }
                }
                pending.push(Rc::new(Node {
                    state: t,
                    depth,
                    parent: Some(node.clone()),
                }));
            }
        }
        Ok(true)
    }

    fn holds(&mut self, states: &[State], loop_to: Option<usize>) -> Result<bool, AtlError> {
        eval_trace(Trace { states, loop_to }, self.search.path, self.leaf)
    }
}

/// Decides a state formula at `s` using only the play semantics.
pub fn brute_force_check(model: &GameModel, s: &State, f: &StateFormula, budget: usize) -> Result<bool, AtlError> {
    model.check_agents(f)?;
    model.arena.validate(s)?;
    let mut oracle = Oracle::new(model, budget);
    oracle.holds(s, f)
}

struct Oracle<'m> {
    model: &'m GameModel,
    memo: HashMap<(StateFormula, State), bool>,
    used: Rc<Cell<usize>>,
    budget: usize,
}

impl<'m> Oracle<'m> {
    fn new(model: &'m GameModel, budget: usize) -> Self {
        Oracle {
            model,
            memo: HashMap::new(),
            used: Rc::new(Cell::new(0)),
            budget,
        }
    }

    fn holds(&mut self, s: &State, f: &StateFormula) -> Result<bool, AtlError> {
        Ok(match f {
            StateFormula::True => true,
            StateFormula::Prop(p) => Atom::resolve(self.model, p)?.holds(s),
            StateFormula::Not(a) => !self.holds(s, a)?,
            StateFormula::And(a, b) => self.holds(s, a)? && self.holds(s, b)?,
            StateFormula::Or(a, b) => self.holds(s, a)? || self.holds(s, b)?,
            StateFormula::Implies(a, b) => !self.holds(s, a)? || self.holds(s, b)?,
            StateFormula::Strategic {
                quantifier,
                coalition,
                path,
            } => {
                let memo_key = (f.clone(), *s);
                if let Some(&v) = self.memo.get(&memo_key) {
                    return Ok(v);
                }
                let v = match quantifier {
                    Quantifier::Exists => self.enforce(s, *coalition, path)?,
                    Quantifier::Forall => !self.enforce(s, *coalition, &PathFormula::negation((**path).clone()))?,
                };
                self.memo.insert(memo_key, v);
                v
            }
            StateFormula::Knows(..) | StateFormula::Everybody(..) | StateFormula::Common(..) => {
                return Err(AtlError::Unsupported(
                    "the brute-force oracle has no epistemic operators".into(),
                ))
            }
        })
    }

    fn enforce(&mut self, s: &State, coalition: AgentSet, path: &PathFormula) -> Result<bool, AtlError> {
        let arena = self.model.arena.clone();
        let budget = self.budget;
        let used = self.used.clone();
        let identity = |_: Agent, x: &State| *x;
        let search = StrategySearch {
            arena: &arena,
            coalition,
            path,
            key: &identity,
            budget,
        };
        let found = {
            let mut leaf = |x: &State, g: &StateFormula| self.holds(x, g);
            search.run(&[*s], &mut leaf, &used)?
        };
        Ok(found.is_some())
    }
}

/// Whether every play from `s` consistent with `table` satisfies `path`.
/// A member without an entry at a visited state fails unless it has a single legal action.
pub fn verify_strategy(
    model: &GameModel,
    s: &State,
    coalition: AgentSet,
    path: &PathFormula,
    table: &StrategyTable,
    budget: usize,
) -> Result<bool, AtlError> {
    let arena = model.arena.clone();
    for agent in coalition.iter() {
        for (state, action) in table.choices.get(&agent).into_iter().flatten() {
            if !arena.actions_unchecked(state, agent).contains(action) {
                return Ok(false);
            }
        }
    }
    let mut oracle = Oracle::new(model, budget);
    let mut stack = vec![vec![*s]];
    let horizon = path.exact_horizon() + 1;
    let mut used = 0;
    while let Some(states) = stack.pop() {
        used += 1;
        if used > budget {
            return Err(AtlError::Resource {
                what: "strategy verification expansions".into(),
                used,
                budget,
            });
        }
        let last = *states.last().expect("non-empty prefix");
        let succ = arena.successors(&last);
        if succ.is_empty() {
            let mut leaf = |x: &State, g: &StateFormula| oracle.holds(x, g);
            if !eval_trace(
                Trace {
                    states: &states,
                    loop_to: None,
                },
                path,
                &mut leaf,
            )? {
                return Ok(false);
            }
            continue;
        }
        {
            let mut leaf = |x: &State, g: &StateFormula| oracle.holds(x, g);
            match eval_prefix(&states, path, &mut leaf)? {
                Some(true) => continue,
                Some(false) => return Ok(false),
                None => {}
            }
        }
        let mut choice = Vec::new();
        for agent in coalition.iter() {
            let legal = arena.actions_unchecked(&last, agent);
            match table.get(agent, &last) {
                Some(a) => choice.push((agent, a)),
                None if legal.len() == 1 => choice.push((agent, legal[0])),
                None => return Ok(false),
            }
        }
        let mut seen = Vec::new();
        for (p, t) in succ {
            if choice.iter().any(|(agent, a)| p.get(*agent) != *a) || seen.contains(&t) {
                continue;
            }
            seen.push(t);
            if states.len() >= horizon {
                if let Some(loop_to) = states.iter().rposition(|x| *x == t) {
                    let mut leaf = |x: &State, g: &StateFormula| oracle.holds(x, g);
                    let trace = Trace {
                        states: &states,
                        loop_to: Some(loop_to),
                    };
                    if !eval_trace(trace, path, &mut leaf)? {
                        return Ok(false);
                    }
                    continue;
                }
            }
            let mut next = states.clone();
            next.push(t);
            stack.push(next);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atl::formula::parse_formula;
    use crate::game::StructureKind;
    use crate::graph::Graph;

    fn model(kind: StructureKind, v: &[&str], e: &[(&str, &str)], start: &str, goal: Option<&str>) -> GameModel {
        let g = Graph::from_pairs(v, e, start, goal).unwrap();
        GameModel::from_arena(Arena::new(kind, g).unwrap())
    }

    fn check(m: &GameModel, f: &str) -> bool {
        let s = m.arena.initial_state();
        brute_force_check(m, &s, &parse_formula(f).unwrap(), DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn single_edge_games() {
        let m = model(StructureKind::Tb, &["v0", "vg"], &[("v0", "vg")], "v0", Some("vg"));
        assert!(check(&m, "<<r>> F g"));
        assert!(!check(&m, "<<d>> G !g"));
        let m = model(StructureKind::Con, &["v0", "vg"], &[("v0", "vg")], "v0", Some("vg"));
        assert!(!check(&m, "<<r>> F g"));
        assert!(check(&m, "<<d>> G !g"));
        assert!(!check(&m, "<<r,d>> F g"));
        assert!(check(&m, "<<r,d>> G X T"));
    }

    #[test]
    fn chain_is_lost_by_the_runner() {
        let m = model(
            StructureKind::Tb,
            &["v", "u", "vg"],
            &[("v", "u"), ("u", "vg")],
            "v",
            Some("vg"),
        );
        assert!(!check(&m, "<<r>> F g"));
        assert!(check(&m, "<<d>> G !g"));
        assert!(check(&m, "[[r]] G !g"));
    }

    #[test]
    fn angelic_cycle_recurrence() {
        let m = model(
            StructureKind::AngelicTb,
            &["0", "1"],
            &[("0", "1"), ("1", "0")],
            "0",
            Some("1"),
        );
        assert!(check(&m, "<<r,a>> G F g"));
        assert!(!check(&m, "<<r>> G F g"));
    }

    #[test]
    fn budget_is_enforced() {
        let m = model(
            StructureKind::Con,
            &["0", "1", "2"],
            &[("0", "1"), ("0", "2"), ("1", "2")],
            "0",
            None,
        );
        let s = m.arena.initial_state();
        let err = brute_force_check(&m, &s, &parse_formula("<<r>> G X T").unwrap(), 3).unwrap_err();
        assert!(matches!(err, AtlError::Resource { budget: 3, .. }));
    }

    #[test]
    fn verifies_explicit_tables() {
        let m = model(
            StructureKind::Tb,
            &["v0", "x", "vg"],
            &[("v0", "vg"), ("v0", "x")],
            "v0",
            Some("vg"),
        );
        let s = m.arena.initial_state();
        let mut t = StrategyTable::new();
        t.insert(Agent::Runner, s, m.arena.action_by_names("v0", "vg").unwrap());
        let ok = verify_strategy(
            &m,
            &s,
            AgentSet::single(Agent::Runner),
            &crate::atl::parse_path("F g").unwrap(),
            &t,
            100,
        );
        assert!(ok.unwrap());
        let empty = StrategyTable::new();
        let ok = verify_strategy(
            &m,
            &s,
            AgentSet::single(Agent::Runner),
            &crate::atl::parse_path("F g").unwrap(),
            &empty,
            100,
        );
        assert!(!ok.unwrap());
    }
}
