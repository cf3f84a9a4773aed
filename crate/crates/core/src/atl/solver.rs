//! Coalition fixed points over explicit state spaces.
//!
//! `CPre_C(Z)` holds at non-terminal states where some joint choice of `C`
//! keeps every successor inside `Z`. With `T` the terminal states:
//!
//! * `F φ = μZ. φ ∪ CPre Z`, `φ U ψ = μZ. ψ ∪ (φ ∩ CPre Z)`
//! * `G φ = νZ. φ ∩ (T ∪ CPre Z)`, `X φ = CPre φ`
//! * `G F φ = νY. μX. (φ ∩ CPre Y) ∪ CPre X ∪ (φ ∩ T)`
//! * `F G φ = μY. νX. (φ ∩ (T ∪ CPre X)) ∪ CPre Y`
//! * `φ U[<=k] ψ` is the until attractor cut at rank `k`.
//! * `φ U[k] ψ` is backward induction on turn-based structures, where the
//!   play length to a state is determined by the state; elsewhere a state may
//!   recur at different times, so it is decided by positional strategy search.
//!
//! Opponents answer each joint choice arbitrarily, so these games are
//! coalition-first turn-based games in which the objectives above are
//! positionally determined and the fixed points are exact for positional
//! strategies.

use std::cell::Cell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use crate::epistemic::Relations;
use crate::game::{Agent, AgentSet, State, StructureKind};

use super::formula::{PathFormula, Quantifier, StateFormula};
use super::label::Atom;
use super::normalize::normalize;
use super::oracle::{StrategySearch, DEFAULT_BUDGET};
use super::space::{Move, StateSpace};
use super::strategy::StrategyTable;
use super::{AtlError, GameModel};

/// Verdict of a top-level check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub verdict: bool,
    /// Present when the normalized formula is `<<C>>γ` and holds.
    pub witness: Option<StrategyTable>,
    pub normalized: StateFormula,
    /// Size of the explored state space.
    pub states: usize,
}

/// How a solved coalition formula is played.
#[derive(Debug, Clone)]
enum Plan {
    /// A move index per winning state.
    Positional(Vec<Option<usize>>),
    /// Only the first step matters.
    OneStep(Vec<Option<usize>>),
    /// Backward-induction layers `L_0 = ψ, …, L_k`.
    Timed(Vec<Vec<bool>>),
    /// Strategy tables found by search.
    Searched(Vec<Option<StrategyTable>>),
}

/// Memoizing checker for normalized formulas over one state space.
#[derive(Debug, Clone)]
pub struct Checker {
    model: GameModel,
    space: StateSpace,
    moves: HashMap<AgentSet, Vec<Vec<Move>>>,
    sat: HashMap<StateFormula, Vec<bool>>,
    plans: HashMap<StateFormula, Plan>,
    relations: Option<Relations>,
    classes: HashMap<Agent, Vec<usize>>,
    budget: usize,
}

/// The core shape of a coalition's path formula.
enum Pattern<'f> {
    Next(&'f StateFormula),
    Finally(&'f StateFormula),
    Globally(&'f StateFormula),
    Until(&'f StateFormula, &'f StateFormula),
    Exactly(usize, &'f StateFormula, &'f StateFormula),
    Within(usize, &'f StateFormula, &'f StateFormula),
    Recurrence(&'f StateFormula),
    Persistence(&'f StateFormula),
}

fn operand(p: &PathFormula) -> Option<&StateFormula> {
    match p {
        PathFormula::State(s) => Some(s),
        _ => None,
    }
}

fn pattern(p: &PathFormula) -> Result<Pattern<'_>, AtlError> {
    let shape = match p {
        PathFormula::Next(a) => operand(a).map(Pattern::Next),
        PathFormula::Finally(a) => match a.as_ref() {
            PathFormula::Globally(b) => operand(b).map(Pattern::Persistence),
            _ => operand(a).map(Pattern::Finally),
        },
        PathFormula::Globally(a) => match a.as_ref() {
            PathFormula::Finally(b) => operand(b).map(Pattern::Recurrence),
            _ => operand(a).map(Pattern::Globally),
        },
        PathFormula::Until(a, b) => operand(a).zip(operand(b)).map(|(a, b)| Pattern::Until(a, b)),
        PathFormula::BoundedUntil(k, a, b) => operand(a).zip(operand(b)).map(|(a, b)| Pattern::Exactly(*k, a, b)),
        PathFormula::UntilWithin(k, a, b) => operand(a).zip(operand(b)).map(|(a, b)| Pattern::Within(*k, a, b)),
        _ => None,
    };
    shape.ok_or_else(|| AtlError::UnsupportedNesting(p.to_string()))
}

fn first_move(moves: &[Move], inside: impl Fn(usize) -> bool) -> Option<usize> {
    moves.iter().position(|m| m.post.iter().all(|&t| inside(t)))
}

/// Layered attractor of `target` through `safe` states, up to `limit` layers.
fn attractor(
    moves: &[Vec<Move>],
    safe: &[bool],
    target: &[bool],
    limit: Option<usize>,
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let n = target.len();
    let mut rank: Vec<Option<usize>> = target.iter().map(|&t| t.then_some(0)).collect();
    let mut choice = vec![None; n];
    let mut layer = 0;
    while limit.is_none_or(|k| layer < k) {
        layer += 1;
        let mut added = Vec::new();
        for x in 0..n {
            if rank[x].is_some() || !safe[x] {
                continue;
            }
            if let Some(m) = first_move(&moves[x], |t| rank[t].is_some_and(|r| r < layer)) {
                added.push((x, m));
            }
        }
        if added.is_empty() {
            break;
        }
        for (x, m) in added {
            rank[x] = Some(layer);
            choice[x] = Some(m);
        }
    }
    (rank, choice)
}

/// Greatest set inside `phi` that the coalition can keep plays in.
fn safety(space: &StateSpace, moves: &[Vec<Move>], phi: &[bool]) -> Vec<bool> {
    let mut z = phi.to_vec();
    loop {
        let next: Vec<bool> = (0..z.len())
            .map(|x| z[x] && (space.is_terminal(x) || first_move(&moves[x], |t| z[t]).is_some()))
            .collect();
        if next == z {
            return z;
        }
        z = next;
    }
}

fn stay_choices(space: &StateSpace, moves: &[Vec<Move>], z: &[bool]) -> Vec<Option<usize>> {
    (0..z.len())
        .map(|x| {
            if z[x] && !space.is_terminal(x) {
                first_move(&moves[x], |t| z[t])
            } else {
                None
            }
        })
        .collect()
}

fn recurrence(space: &StateSpace, moves: &[Vec<Move>], phi: &[bool]) -> (Vec<bool>, Vec<Option<usize>>) {
    let n = phi.len();
    let all = vec![true; n];
    let mut y = all.clone();
    loop {
        let base: Vec<bool> = (0..n)
            .map(|x| phi[x] && (space.is_terminal(x) || first_move(&moves[x], |t| y[t]).is_some()))
            .collect();
        let (rank, mut choice) = attractor(moves, &all, &base, None);
        let x: Vec<bool> = rank.iter().map(Option::is_some).collect();
        if x == y {
            for s in 0..n {
                if rank[s] == Some(0) && !space.is_terminal(s) {
                    choice[s] = first_move(&moves[s], |t| y[t]);
                }
            }
            return (y, choice);
        }
        y = x;
    }
}

fn persistence(space: &StateSpace, moves: &[Vec<Move>], phi: &[bool]) -> (Vec<bool>, Vec<Option<usize>>) {
    let n = phi.len();
    let mut rank: Vec<Option<usize>> = vec![None; n];
    let mut round = 0;
    loop {
        round += 1;
        let below = |t: usize| rank[t].is_some();
        let mut x = vec![true; n];
        loop {
            let next: Vec<bool> = (0..n)
                .map(|s| {
                    let stay = phi[s] && (space.is_terminal(s) || first_move(&moves[s], |t| x[t]).is_some());
                    stay || first_move(&moves[s], below).is_some()
                })
                .collect();
            if next == x {
                break;
            }
            x = next;
        }
        let fresh: Vec<usize> = (0..n).filter(|&s| x[s] && rank[s].is_none()).collect();
        if fresh.is_empty() {
            break;
        }
        for s in fresh {
            rank[s] = Some(round);
        }
    }
    let choice = (0..n)
        .map(|s| {
            let r = rank[s]?;
            if space.is_terminal(s) {
                return None;
            }
            first_move(&moves[s], |t| rank[t].is_some_and(|q| q < r))
                .or_else(|| first_move(&moves[s], |t| rank[t].is_some_and(|q| q <= r)))
        })
        .collect();
    (rank.iter().map(Option::is_some).collect(), choice)
}

impl Checker {
    /// Checker over the states reachable from `roots`.
    pub fn new(model: GameModel, roots: &[State]) -> Result<Self, AtlError> {
        let space = StateSpace::reachable(&model.arena, roots)?;
        Ok(Self::over(model, space))
    }

    /// Checker over every state of the structure.
    pub fn full(model: GameModel) -> Result<Self, AtlError> {
        let space = StateSpace::full(&model.arena)?;
        Ok(Self::over(model, space))
    }

    pub fn over(model: GameModel, space: StateSpace) -> Self {
        Checker {
            model,
            space,
            moves: HashMap::new(),
            sat: HashMap::new(),
            plans: HashMap::new(),
            relations: None,
            classes: HashMap::new(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_relations(mut self, relations: Relations) -> Self {
        self.relations = Some(relations);
        self.classes.clear();
        self.sat.retain(|f, _| !f.has_epistemic());
        self
    }

    /// Budget for strategy searches on exact-step until formulas.
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn model(&self) -> &GameModel {
        &self.model
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    fn index(&self, s: &State) -> Result<usize, AtlError> {
        self.model.arena.validate(s)?;
        self.space.index_of(s).ok_or_else(|| {
            AtlError::Unsupported(format!(
                "state {} is outside the explored state space",
                self.model.arena.format_state(s)
            ))
        })
    }

    /// Truth of a formula, normalized first, at `s`.
    pub fn holds(&mut self, s: &State, f: &StateFormula) -> Result<bool, AtlError> {
        self.model.check_agents(f)?;
        let i = self.index(s)?;
        let n = normalize(f)?;
        Ok(self.sat(&n)?[i])
    }

    /// Full outcome at `s`, with a witness for a true top-level `<<C>>γ`.
    pub fn check(&mut self, s: &State, f: &StateFormula) -> Result<CheckOutcome, AtlError> {
        self.model.check_agents(f)?;
        let i = self.index(s)?;
        let normalized = normalize(f)?;
        let verdict = self.sat(&normalized)?[i];
        let witness = if verdict { self.witness(s, &normalized)? } else { None };
        Ok(CheckOutcome {
            verdict,
            witness,
            normalized,
            states: self.space.len(),
        })
    }

    fn moves(&mut self, c: AgentSet) -> &[Vec<Move>] {
        let space = &self.space;
        self.moves.entry(c).or_insert_with(|| space.coalition_moves(c))
    }

    fn class_ids(&mut self, agent: Agent) -> Result<Vec<usize>, AtlError> {
        if let Some(c) = self.classes.get(&agent) {
            return Ok(c.clone());
        }
        let rel = self.relations.as_ref().ok_or(AtlError::MissingRelation(agent))?;
        let ids = rel.class_ids(&self.space, agent)?;
        self.classes.insert(agent, ids.clone());
        Ok(ids)
    }

    /// Satisfaction vector of a normalized formula over the state space.
    pub fn sat(&mut self, f: &StateFormula) -> Result<Vec<bool>, AtlError> {
        if let Some(v) = self.sat.get(f) {
            return Ok(v.clone());
        }
        let n = self.space.len();
        let v = match f {
            StateFormula::True => vec![true; n],
            StateFormula::Prop(p) => {
                let atom = Atom::resolve(&self.model, p)?;
                self.space.states().iter().map(|s| atom.holds(s)).collect()
            }
            StateFormula::Not(a) => self.sat(a)?.into_iter().map(|x| !x).collect(),
            StateFormula::And(a, b) => {
                let (a, b) = (self.sat(a)?, self.sat(b)?);
                a.iter().zip(&b).map(|(x, y)| *x && *y).collect()
            }
            StateFormula::Or(a, b) => {
                let (a, b) = (self.sat(a)?, self.sat(b)?);
                a.iter().zip(&b).map(|(x, y)| *x || *y).collect()
            }
            StateFormula::Implies(a, b) => {
                let (a, b) = (self.sat(a)?, self.sat(b)?);
                a.iter().zip(&b).map(|(x, y)| !*x || *y).collect()
            }
            StateFormula::Knows(agent, a) => {
                let phi = self.sat(a)?;
                let ids = self.class_ids(*agent)?;
                universal(&ids, &phi)
            }
            StateFormula::Everybody(group, a) => {
                let mut phi = self.sat(a)?;
                let base = phi.clone();
                for agent in group.iter() {
                    let ids = self.class_ids(agent)?;
                    let k = universal(&ids, &base);
                    phi.iter_mut().zip(k).for_each(|(x, y)| *x = *x && y);
                }
                phi
            }
            StateFormula::Common(group, a) => {
                let phi = self.sat(a)?;
                let mut uf = UnionFind::new(n);
                for agent in group.iter() {
                    let ids = self.class_ids(agent)?;
                    let mut first: HashMap<usize, usize> = HashMap::new();
                    for (x, id) in ids.iter().enumerate() {
                        let root = *first.entry(*id).or_insert(x);
                        uf.union(root, x);
                    }
                }
                let ids: Vec<usize> = (0..n).map(|x| uf.find(x)).collect();
                universal(&ids, &phi)
            }
            StateFormula::Strategic {
                quantifier: Quantifier::Forall,
                ..
            } => {
                let n = normalize(f)?;
                self.sat(&n)?
            }
            StateFormula::Strategic {
                quantifier: Quantifier::Exists,
                coalition,
                path,
            } => {
                let (v, plan) = self.solve(*coalition, path)?;
                self.plans.insert(f.clone(), plan);
                v
            }
        };
        self.sat.insert(f.clone(), v.clone());
        Ok(v)
    }

    fn solve(&mut self, c: AgentSet, path: &PathFormula) -> Result<(Vec<bool>, Plan), AtlError> {
        if !c.is_subset(self.model.arena.agents()) {
            return Err(AtlError::CoalitionNotInStructure {
                coalition: c.difference(self.model.arena.agents()),
                kind: self.model.kind(),
            });
        }
        let n = self.space.len();
        let all = vec![true; n];
        Ok(match pattern(path)? {
            Pattern::Next(a) => {
                let phi = self.sat(a)?;
                let moves = self.moves(c);
                let choice: Vec<Option<usize>> = moves.iter().map(|m| first_move(m, |t| phi[t])).collect();
                (choice.iter().map(Option::is_some).collect(), Plan::OneStep(choice))
            }
            Pattern::Finally(a) => {
                let phi = self.sat(a)?;
                let (rank, choice) = attractor(self.moves(c), &all, &phi, None);
                (rank.iter().map(Option::is_some).collect(), Plan::Positional(choice))
            }
            Pattern::Until(a, b) => {
                let (phi, psi) = (self.sat(a)?, self.sat(b)?);
                let (rank, choice) = attractor(self.moves(c), &phi, &psi, None);
                (rank.iter().map(Option::is_some).collect(), Plan::Positional(choice))
            }
            Pattern::Within(k, a, b) => {
                let (phi, psi) = (self.sat(a)?, self.sat(b)?);
                let (rank, choice) = attractor(self.moves(c), &phi, &psi, Some(k));
                (rank.iter().map(Option::is_some).collect(), Plan::Positional(choice))
            }
            Pattern::Globally(a) => {
                let phi = self.sat(a)?;
                self.moves(c);
                let moves = &self.moves[&c];
                let z = safety(&self.space, moves, &phi);
                let choice = stay_choices(&self.space, moves, &z);
                (z, Plan::Positional(choice))
            }
            Pattern::Recurrence(a) => {
                let phi = self.sat(a)?;
                self.moves(c);
                let (z, choice) = recurrence(&self.space, &self.moves[&c], &phi);
                (z, Plan::Positional(choice))
            }
            Pattern::Persistence(a) => {
                let phi = self.sat(a)?;
                self.moves(c);
                let (z, choice) = persistence(&self.space, &self.moves[&c], &phi);
                (z, Plan::Positional(choice))
            }
            Pattern::Exactly(k, a, b) => {
                let (phi, psi) = (self.sat(a)?, self.sat(b)?);
                if self.model.kind() == StructureKind::Tb {
                    let moves = self.moves(c);
                    let mut layers = vec![psi];
                    for _ in 0..k {
                        let prev = layers.last().expect("layers are non-empty");
                        let next: Vec<bool> = (0..n)
                            .map(|x| phi[x] && first_move(&moves[x], |t| prev[t]).is_some())
                            .collect();
                        layers.push(next);
                    }
                    (layers[k].clone(), Plan::Timed(layers))
                } else {
                    self.search_exactly(c, k, a, b, &phi, &psi)?
                }
            }
        })
    }

    fn search_exactly(
        &self,
        c: AgentSet,
        k: usize,
        a: &StateFormula,
        b: &StateFormula,
        phi: &[bool],
        psi: &[bool],
    ) -> Result<(Vec<bool>, Plan), AtlError> {
        let path = PathFormula::bounded_until(k, PathFormula::state(a.clone()), PathFormula::state(b.clone()));
        let identity = |_: Agent, x: &State| *x;
        let search = StrategySearch {
            arena: &self.model.arena,
            coalition: c,
            path: &path,
            key: &identity,
            budget: self.budget,
        };
        let used = Rc::new(Cell::new(0));
        let space = &self.space;
        let mut leaf = |x: &State, g: &StateFormula| {
            let i = space
                .index_of(x)
                .ok_or_else(|| AtlError::Unsupported("state outside the space".into()))?;
            if g == a {
                Ok(phi[i])
            } else if g == b {
                Ok(psi[i])
            } else {
                Err(AtlError::Unsupported(g.to_string()))
            }
        };
        let mut sat = Vec::with_capacity(space.len());
        let mut tables = Vec::with_capacity(space.len());
        for s in space.states() {
            let t = search.run(&[*s], &mut leaf, &used)?;
            sat.push(t.is_some());
            tables.push(t);
        }
        Ok((sat, Plan::Searched(tables)))
    }

    /// A positional strategy for a true normalized `<<C>>γ` at `s`, restricted
    /// to the states its plays visit.
    pub fn witness(&mut self, s: &State, f: &StateFormula) -> Result<Option<StrategyTable>, AtlError> {
        let StateFormula::Strategic {
            quantifier: Quantifier::Exists,
            coalition,
            ..
        } = f
        else {
            return Ok(None);
        };
        let root = self.index(s)?;
        if !self.sat(f)?[root] {
            return Ok(None);
        }
        let c = *coalition;
        let plan = self.plans[f].clone();
        self.moves(c);
        let moves = &self.moves[&c];
        let mut table = StrategyTable::new();
        let mut record = |x: usize, m: &Move| {
            for (agent, action) in c.iter().zip(&m.choice) {
                table.insert(agent, *self.space.state(x), *action);
            }
        };
        match plan {
            Plan::Searched(tables) => return Ok(tables[root].clone()),
            Plan::OneStep(choice) => {
                if let Some(m) = choice[root] {
                    record(root, &moves[root][m]);
                }
            }
            Plan::Positional(choice) => {
                let mut seen = BTreeSet::from([root]);
                let mut stack = vec![root];
                while let Some(x) = stack.pop() {
                    let Some(m) = choice[x] else { continue };
                    let mv = &moves[x][m];
                    record(x, mv);
                    for &t in &mv.post {
                        if seen.insert(t) {
                            stack.push(t);
                        }
                    }
                }
            }
            Plan::Timed(layers) => {
                let k = layers.len() - 1;
                let mut frontier = BTreeSet::from([root]);
                for t in 0..k {
                    let target = &layers[k - t - 1];
                    let mut next = BTreeSet::new();
                    for &x in &frontier {
                        if let Some(m) = first_move(&moves[x], |y| target[y]) {
                            let mv = &moves[x][m];
                            record(x, mv);
                            next.extend(mv.post.iter().copied());
                        }
                    }
                    frontier = next;
                }
            }
        }
        Ok(Some(table))
    }
}

fn universal(ids: &[usize], phi: &[bool]) -> Vec<bool> {
    let mut ok: HashMap<usize, bool> = HashMap::new();
    for (id, v) in ids.iter().zip(phi) {
        let e = ok.entry(*id).or_insert(true);
        *e = *e && *v;
    }
    ids.iter().map(|id| ok[id]).collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Checks `f` at `s` over the states reachable from `s`, or over the whole
/// structure when `f` has epistemic operators.
pub fn check_state(model: &GameModel, s: &State, f: &StateFormula) -> Result<CheckOutcome, AtlError> {
    check_state_with(model, None, s, f)
}

/// As [`check_state`], with indistinguishability relations for `K`, `E` and `C`.
pub fn check_state_with(
    model: &GameModel,
    relations: Option<&Relations>,
    s: &State,
    f: &StateFormula,
) -> Result<CheckOutcome, AtlError> {
    model.check_agents(f)?;
    model.arena.validate(s)?;
    let mut checker = if f.has_epistemic() {
        Checker::full(model.clone())?
    } else {
        Checker::new(model.clone(), &[*s])?
    };
    if let Some(r) = relations {
        checker = checker.with_relations(r.clone());
    }
    checker.check(s, f)
}
