//! Indistinguishability relations, knowledge operators and uniform strategies.

use std::cell::Cell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use serde_json::Value;

use crate::atl::normalize::normalize;
use crate::atl::oracle::{StrategySearch, DEFAULT_BUDGET};
use crate::atl::{AtlError, Checker, GameModel, PathFormula, Quantifier, StateFormula, StateSpace};
use crate::game::{Action, Agent, AgentSet, Arena, GameError, State};

/// How an agent confuses game-states. Every relation is an equivalence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Relation {
    /// Only equal states.
    Identity,
    /// Same owner and same number of outgoing edges at the runner's position.
    LocalDegree,
    /// Same owner and same remaining edges; the position is hidden.
    EdgeBlind,
    /// The equivalence closure of the listed pairs.
    Explicit(Vec<(State, State)>),
}

impl Relation {
    pub fn name(&self) -> &'static str {
        match self {
            Relation::Identity => "identity",
            Relation::LocalDegree => "local_degree",
            Relation::EdgeBlind => "edge_blind",
            Relation::Explicit(_) => "explicit",
        }
    }

    /// Whether `s` and `t` are indistinguishable in `arena`.
    pub fn related(&self, arena: &Arena, s: &State, t: &State) -> Result<bool, GameError> {
        arena.validate(s)?;
        arena.validate(t)?;
        Ok(match self {
            Relation::Identity => s == t,
            Relation::LocalDegree => {
                s.owner == t.owner
                    && arena.out_edges(s.edges, s.position).len() == arena.out_edges(t.edges, t.position).len()
            }
            Relation::EdgeBlind => s.owner == t.owner && s.edges == t.edges,
            Relation::Explicit(pairs) => {
                if s == t {
                    return Ok(true);
                }
                let mut uf = Closure::default();
                for (a, b) in pairs {
                    uf.union(*a, *b);
                }
                uf.find(*s) == uf.find(*t)
            }
        })
    }

    /// A class identifier per state of `space`.
    pub fn class_ids(&self, space: &StateSpace) -> Vec<usize> {
        let arena = space.arena();
        let mut ids: HashMap<(Option<Agent>, u64), usize> = HashMap::new();
        let mut keyed = |k: (Option<Agent>, u64)| {
            let next = ids.len();
            *ids.entry(k).or_insert(next)
        };
        match self {
            Relation::Identity => (0..space.len()).collect(),
            Relation::LocalDegree => space
                .states()
                .iter()
                .map(|s| keyed((s.owner, arena.out_edges(s.edges, s.position).len() as u64)))
                .collect(),
            Relation::EdgeBlind => space
                .states()
                .iter()
                .map(|s| keyed((s.owner, s.edges.bits())))
                .collect(),
            Relation::Explicit(pairs) => {
                let mut uf = Closure::default();
                for (a, b) in pairs {
                    uf.union(*a, *b);
                }
                space
                    .states()
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let root = uf.find(*s);
                        space.index_of(&root).map_or(i, |r| space.len() + r)
                    })
                    .collect()
            }
        }
    }
}

#[derive(Default)]
struct Closure(HashMap<State, State>);

impl Closure {
    fn find(&mut self, s: State) -> State {
        let mut root = s;
        while let Some(&p) = self.0.get(&root) {
            if p == root {
                break;
            }
            root = p;
        }
        root
    }

    fn union(&mut self, a: State, b: State) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0.insert(hi, lo);
            self.0.entry(lo).or_insert(lo);
        }
    }
}

/// Relations per agent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Relations {
    pub by_agent: BTreeMap<Agent, Relation>,
}

impl Relations {
    pub fn new() -> Self {
        Self::default()
    }

    /// Identity for every agent of the arena.
    pub fn identity(arena: &Arena) -> Self {
        let mut r = Self::new();
        for a in arena.agents().iter() {
            r.set(a, Relation::Identity);
        }
        r
    }

    pub fn set(&mut self, agent: Agent, rel: Relation) -> &mut Self {
        self.by_agent.insert(agent, rel);
        self
    }

    pub fn with(mut self, agent: Agent, rel: Relation) -> Self {
        self.set(agent, rel);
        self
    }

    pub fn get(&self, agent: Agent) -> Option<&Relation> {
        self.by_agent.get(&agent)
    }

    /// Class identifiers of `agent` over `space`.
    pub fn class_ids(&self, space: &StateSpace, agent: Agent) -> Result<Vec<usize>, AtlError> {
        self.get(agent)
            .map(|r| r.class_ids(space))
            .ok_or(AtlError::MissingRelation(agent))
    }

    /// Reads `{"relations": {...}}` or a bare map from agent names to
    /// `"identity"`, `"local_degree"`, `"edge_blind"` or `{"explicit": [[s, t], ...]}`
    /// where states are serialized objects or `((E,v),o)` strings.
    pub fn from_json(arena: &Arena, v: &Value) -> Result<Self, AtlError> {
        let map = match v.get("relations") {
            Some(inner) => inner,
            None => v,
        };
        let obj = map
            .as_object()
            .ok_or_else(|| bad_config("expected an object of agent relations"))?;
        let mut out = Relations::new();
        for (name, entry) in obj {
            let agent: Agent = name.parse().map_err(AtlError::Game)?;
            if !arena.agents().contains(agent) {
                return Err(AtlError::Game(GameError::AgentNotInStructure {
                    agent,
                    kind: arena.kind(),
                }));
            }
            let rel = match entry {
                Value::String(s) => match s.as_str() {
                    "identity" => Relation::Identity,
                    "local_degree" => Relation::LocalDegree,
                    "edge_blind" => Relation::EdgeBlind,
                    other => return Err(bad_config(&format!("unknown relation \"{other}\""))),
                },
                Value::Object(o) if o.contains_key("explicit") => {
                    let pairs = o["explicit"]
                        .as_array()
                        .ok_or_else(|| bad_config("explicit relation needs a list of pairs"))?;
                    let mut list = Vec::new();
                    for p in pairs {
                        let pair = p
                            .as_array()
                            .filter(|a| a.len() == 2)
                            .ok_or_else(|| bad_config("explicit pairs have two states"))?;
                        list.push((state_of(arena, &pair[0])?, state_of(arena, &pair[1])?));
                    }
                    Relation::Explicit(list)
                }
                _ => return Err(bad_config("relation must be a name or {\"explicit\": [...]}")),
            };
            out.set(agent, rel);
        }
        Ok(out)
    }
}

fn bad_config(msg: &str) -> AtlError {
    AtlError::Unsupported(format!("invalid relations config: {msg}"))
}

fn state_of(arena: &Arena, v: &Value) -> Result<State, AtlError> {
    let s = match v {
        Value::String(text) => arena.parse_state(text)?,
        other => arena.state_from_json(other)?,
    };
    arena.validate(&s)?;
    Ok(s)
}

/// Evaluates a formula that may contain `K`, `E` and `C` at `s`.
pub fn check_epistemic(
    model: &GameModel,
    relations: &Relations,
    s: &State,
    f: &StateFormula,
) -> Result<bool, AtlError> {
    model.check_agents(f)?;
    let mut checker = Checker::full(model.clone())?.with_relations(relations.clone());
    checker.holds(s, f)
}

/// Imperfect-information check: top-level coalitions quantify over uniform
/// positional strategies and must win from every state the coalition's
/// members consider possible. Nested formulas use perfect information.
/// Agents without a declared relation see states exactly.
pub fn check_imp(model: &GameModel, relations: &Relations, s: &State, f: &StateFormula) -> Result<bool, AtlError> {
    check_imp_with_budget(model, relations, s, f, DEFAULT_BUDGET)
}

pub fn check_imp_with_budget(
    model: &GameModel,
    relations: &Relations,
    s: &State,
    f: &StateFormula,
    budget: usize,
) -> Result<bool, AtlError> {
    model.check_agents(f)?;
    model.arena.validate(s)?;
    let mut filled = relations.clone();
    for a in model.arena.agents().iter() {
        filled.by_agent.entry(a).or_insert(Relation::Identity);
    }
    let checker = Checker::full(model.clone())?
        .with_relations(filled.clone())
        .with_budget(budget);
    let mut imp = Imp {
        checker,
        relations: filled,
        used: Rc::new(Cell::new(0)),
        budget,
    };
    let n = normalize(f)?;
    imp.holds(s, &n)
}

struct Imp {
    checker: Checker,
    relations: Relations,
    used: Rc<Cell<usize>>,
    budget: usize,
}

impl Imp {
    fn holds(&mut self, s: &State, f: &StateFormula) -> Result<bool, AtlError> {
        Ok(match f {
            StateFormula::Not(a) => !self.holds(s, a)?,
            StateFormula::And(a, b) => self.holds(s, a)? && self.holds(s, b)?,
            StateFormula::Or(a, b) => self.holds(s, a)? || self.holds(s, b)?,
            StateFormula::Implies(a, b) => !self.holds(s, a)? || self.holds(s, b)?,
            StateFormula::Strategic {
                quantifier: Quantifier::Exists,
                coalition,
                path,
            } => self.uniform(s, *coalition, path)?,
            other => self.checker.holds(s, other)?,
        })
    }

    fn uniform(&mut self, s: &State, c: AgentSet, path: &PathFormula) -> Result<bool, AtlError> {
        let space = self.checker.space().clone();
        let arena = space.arena().clone();
        let root = space
            .index_of(s)
            .ok_or_else(|| AtlError::Unsupported("state outside the space".into()))?;
        let mut classes: BTreeMap<Agent, Vec<usize>> = BTreeMap::new();
        for a in c.iter() {
            classes.insert(a, self.relations.class_ids(&space, a)?);
        }
        let roots: Vec<State> = (0..space.len())
            .filter(|&x| x == root || classes.values().any(|ids| ids[x] == ids[root]))
            .map(|x| *space.state(x))
            .collect();
        // Uniform choice keys: the agent's class, split by the legal action set.
        let mut reps: BTreeMap<Agent, HashMap<(usize, Vec<Action>), State>> = BTreeMap::new();
        for (a, ids) in &classes {
            let m = reps.entry(*a).or_default();
            for (x, st) in space.states().iter().enumerate() {
                let legal = arena.actions_unchecked(st, *a);
                let e = m.entry((ids[x], legal)).or_insert(*st);
                if *st < *e {
                    *e = *st;
                }
            }
        }
        let key = |a: Agent, x: &State| -> State {
            let i = space.index_of(x).expect("search stays in the full space");
            let legal = arena.actions_unchecked(x, a);
            reps[&a][&(classes[&a][i], legal)]
        };
        let mut leaves: HashMap<StateFormula, Vec<bool>> = HashMap::new();
        let mut pending = Vec::new();
        path.visit_states(&mut |g| pending.push(g.clone()));
        for g in pending {
            let v = self.checker.sat(&g)?;
            leaves.insert(g, v);
        }
        let search = StrategySearch {
            arena: &arena,
            coalition: c,
            path,
            key: &key,
            budget: self.budget,
        };
        let mut leaf = |x: &State, g: &StateFormula| {
            let i = space
                .index_of(x)
                .ok_or_else(|| AtlError::Unsupported("state outside the space".into()))?;
            leaves
                .get(g)
                .map(|v| v[i])
                .ok_or_else(|| AtlError::Unsupported(g.to_string()))
        };
        Ok(search.run(&roots, &mut leaf, &self.used)?.is_some())
    }
}
