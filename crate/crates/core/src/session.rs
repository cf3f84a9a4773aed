//! In-memory play sessions: turn mediation, solver replies, hints and snapshots.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use thiserror::Error;

use crate::atl::{parse_formula, AtlError, Checker, GameModel, PathFormula, StateFormula, StrategyTable};
use crate::epistemic::Relations;
use crate::game::{Action, ActionProfile, Agent, AgentSet, Arena, GameError, State, StructureKind};
use crate::graph::{Graph, VertexId};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("unknown session \"{0}\"")]
    NotFound(String),
    #[error("stale token: expected {expected}, got {got}")]
    Conflict { expected: u64, got: u64 },
    #[error("no human agent acts in the current state")]
    NotYourTurn,
    #[error("agent {0} is not played by the human")]
    NotHuman(Agent),
    #[error("agent {0} does not act in the current state")]
    NotActing(Agent),
    #[error("missing choice for agent {0}")]
    MissingChoice(Agent),
    #[error("no solver agent acts in the current state")]
    HumanTurn,
    #[error("the play has ended")]
    GameOver,
    #[error("invalid session request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Atl(#[from] AtlError),
}

/// Parameters of a new session.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub kind: StructureKind,
    pub graph: Graph,
    pub goal: Option<VertexId>,
    pub human: AgentSet,
    /// Objective of the solver-driven agents; defaults by role.
    pub objective: Option<StateFormula>,
    pub relations: Option<Relations>,
    pub seed: u64,
}

/// Outcome of an applied move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveOutcome {
    pub profile: ActionProfile,
    pub state: State,
    /// The solver had no winning witness and picked uniformly at random.
    pub random: bool,
    pub token: u64,
}

/// Verdict of the objective after one human choice, over every solver reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hint {
    pub choice: BTreeMap<Agent, Action>,
    pub verdict: bool,
    pub outcomes: Vec<(State, bool)>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub model: GameModel,
    pub state: State,
    pub states: Vec<State>,
    pub history: Vec<ActionProfile>,
    pub human: AgentSet,
    pub objective: StateFormula,
    pub relations: Option<Relations>,
    pub seed: u64,
    pub token: u64,
    pub created_ms: u64,
    pub updated_ms: u64,
    checker: Checker,
    solver_strategy: Option<StrategyTable>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Default objective of a coalition: reach the goal when the runner or the
/// angel leads it, avoid it otherwise. Without a goal it is survival.
pub fn default_objective(coalition: AgentSet, has_goal: bool) -> StateFormula {
    let runner_side =
        coalition.contains(Agent::Runner) || (coalition.contains(Agent::Angel) && !coalition.contains(Agent::Demon));
    let alive = || PathFormula::next(PathFormula::truth());
    let path = match (has_goal, runner_side) {
        (true, true) => PathFormula::finally(PathFormula::goal()),
        (true, false) => PathFormula::globally(PathFormula::state(StateFormula::negation(StateFormula::goal()))),
        (false, true) => PathFormula::globally(alive()),
        (false, false) => PathFormula::finally(PathFormula::negation(alive())),
    };
    StateFormula::exists(coalition, path)
}

impl Session {
    pub fn new(id: String, cfg: SessionConfig) -> Result<Self, SessionError> {
        let arena = Arena::new(cfg.kind, cfg.graph)?;
        if !cfg.human.is_subset(arena.agents()) {
            return Err(SessionError::Invalid(format!(
                "human roles {{{}}} are not agents of {} structures",
                cfg.human, cfg.kind
            )));
        }
        let model = GameModel::new(arena, cfg.goal);
        let solver = model.arena.agents().difference(cfg.human);
        let objective = cfg
            .objective
            .unwrap_or_else(|| default_objective(solver, cfg.goal.is_some()));
        model.check_agents(&objective)?;
        let state = model.arena.initial_state();
        let checker = Checker::new(model.clone(), &[state])?;
        let now = now_ms();
        Ok(Session {
            id,
            model,
            state,
            states: vec![state],
            history: Vec::new(),
            human: cfg.human,
            objective,
            relations: cfg.relations,
            seed: cfg.seed,
            token: 0,
            created_ms: now,
            updated_ms: now,
            checker,
            solver_strategy: None,
        })
    }

    pub fn arena(&self) -> &Arena {
        &self.model.arena
    }

    pub fn solver_agents(&self) -> AgentSet {
        self.arena().agents().difference(self.human)
    }

    /// Agents whose choice matters at the current state.
    pub fn acting_agents(&self) -> AgentSet {
        let arena = self.arena();
        if arena.kind().is_turn_based() {
            self.state.owner.map(AgentSet::single).unwrap_or(AgentSet::EMPTY)
        } else {
            arena.agents()
        }
    }

    pub fn is_over(&self) -> bool {
        self.arena().is_terminal(&self.state)
    }

    /// Legal choices of the human agents that act now.
    pub fn legal_moves(&self) -> Result<BTreeMap<Agent, Vec<Action>>, SessionError> {
        let mut out = BTreeMap::new();
        if self.is_over() {
            return Ok(out);
        }
        for agent in self.acting_agents().intersection(self.human).iter() {
            out.insert(agent, self.arena().legal_actions(&self.state, agent)?);
        }
        Ok(out)
    }

    fn check_token(&self, token: Option<u64>) -> Result<(), SessionError> {
        match token {
            Some(t) if t != self.token => Err(SessionError::Conflict {
                expected: self.token,
                got: t,
            }),
            _ => Ok(()),
        }
    }

    fn blank_profile(&self) -> ActionProfile {
        ActionProfile {
            runner: Action::Skip,
            demon: Action::Skip,
            angel: (self.arena().kind() == StructureKind::AngelicTb).then_some(Action::Skip),
        }
    }

    /// Applies the human's choices; solver agents acting in the same round
    /// reply positionally without seeing them.
    pub fn human_move(
        &mut self,
        token: Option<u64>,
        choice: &BTreeMap<Agent, Action>,
    ) -> Result<MoveOutcome, SessionError> {
        self.check_token(token)?;
        if self.is_over() {
            return Err(SessionError::GameOver);
        }
        let acting = self.acting_agents();
        let humans = acting.intersection(self.human);
        if humans.is_empty() {
            return Err(SessionError::NotYourTurn);
        }
        for &agent in choice.keys() {
            if !self.human.contains(agent) {
                return Err(SessionError::NotHuman(agent));
            }
            if !acting.contains(agent) {
                return Err(SessionError::NotActing(agent));
            }
        }
        let mut profile = self.blank_profile();
        for agent in humans.iter() {
            let action = match choice.get(&agent) {
                Some(a) => *a,
                None => {
                    let legal = self.arena().legal_actions(&self.state, agent)?;
                    match legal.as_slice() {
                        [only] => *only,
                        _ => return Err(SessionError::MissingChoice(agent)),
                    }
                }
            };
            profile.set(agent, action);
        }
        // Validate the human part before the solver commits.
        self.arena().step(&self.state, &{
            let mut probe = profile;
            for agent in acting.difference(self.human).iter() {
                let legal = self.arena().legal_actions(&self.state, agent)?;
                probe.set(agent, legal[0]);
            }
            probe
        })?;
        let random = self.fill_solver(&mut profile, acting.difference(self.human))?;
        self.apply(profile, random)
    }

    /// Plays the solver agents' choices when only they act.
    pub fn solver_move(&mut self, token: Option<u64>) -> Result<MoveOutcome, SessionError> {
        self.check_token(token)?;
        if self.is_over() {
            return Err(SessionError::GameOver);
        }
        let acting = self.acting_agents();
        if !acting.intersection(self.human).is_empty() || acting.is_empty() {
            return Err(SessionError::HumanTurn);
        }
        let mut profile = self.blank_profile();
        let random = self.fill_solver(&mut profile, acting)?;
        self.apply(profile, random)
    }

    /// The witness for the objective at the current state, re-synthesized
    /// when the stored one no longer guarantees it.
    fn solver_plan(&mut self) -> Result<Option<StrategyTable>, SessionError> {
        if !self.checker.holds(&self.state, &self.objective)? {
            self.solver_strategy = None;
            return Ok(None);
        }
        let covered = self.solver_strategy.as_ref().is_some_and(|t| {
            self.acting_agents()
                .intersection(self.solver_agents())
                .iter()
                .all(|a| t.get(a, &self.state).is_some())
        });
        if !covered {
            self.solver_strategy = self.checker.check(&self.state, &self.objective)?.witness;
        }
        Ok(self.solver_strategy.clone())
    }

    fn fill_solver(&mut self, profile: &mut ActionProfile, agents: AgentSet) -> Result<bool, SessionError> {
        if agents.is_empty() {
            return Ok(false);
        }
        let plan = self.solver_plan()?;
        let mut rng =
            StdRng::seed_from_u64(self.seed ^ (self.history.len() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut random = false;
        for agent in agents.iter() {
            let legal = self.arena().legal_actions(&self.state, agent)?;
            let planned = plan
                .as_ref()
                .and_then(|t| t.get(agent, &self.state))
                .filter(|a| legal.contains(a));
            let action = match (planned, legal.as_slice()) {
                (Some(a), _) => a,
                (None, [only]) => *only,
                (None, _) => {
                    random = true;
                    *legal.choose(&mut rng).expect("legal sets are non-empty")
                }
            };
            profile.set(agent, action);
        }
        Ok(random)
    }

    fn apply(&mut self, profile: ActionProfile, random: bool) -> Result<MoveOutcome, SessionError> {
        let next = self.arena().step(&self.state, &profile)?;
        self.state = next;
        self.states.push(next);
        self.history.push(profile);
        self.token += 1;
        self.updated_ms = now_ms();
        Ok(MoveOutcome {
            profile,
            state: next,
            random,
            token: self.token,
        })
    }

    /// Truth of `f` at the current state.
    pub fn eval(&mut self, f: &StateFormula) -> Result<bool, SessionError> {
        let s = self.state;
        self.eval_at(&s, f)
    }

    fn eval_at(&mut self, s: &State, f: &StateFormula) -> Result<bool, SessionError> {
        if f.has_epistemic() {
            let relations = self
                .relations
                .clone()
                .unwrap_or_else(|| Relations::identity(self.arena()));
            Ok(crate::epistemic::check_epistemic(&self.model, &relations, s, f)?)
        } else {
            Ok(self.checker.holds(s, f)?)
        }
    }

    /// For each joint choice of the acting human agents, the verdict of `f`
    /// (the human coalition's default objective when absent) in every successor.
    pub fn hint(&mut self, f: Option<&StateFormula>) -> Result<Vec<Hint>, SessionError> {
        let humans = self.acting_agents().intersection(self.human);
        if humans.is_empty() || self.is_over() {
            return Ok(Vec::new());
        }
        let f = match f {
            Some(f) => f.clone(),
            None => default_objective(self.human, self.model.goal.is_some()),
        };
        self.model.check_agents(&f)?;
        let mut grouped: BTreeMap<Vec<(Agent, Action)>, Vec<State>> = BTreeMap::new();
        for (p, t) in self.arena().successors(&self.state) {
            let key: Vec<(Agent, Action)> = humans.iter().map(|a| (a, p.get(a))).collect();
            let entry = grouped.entry(key).or_default();
            if !entry.contains(&t) {
                entry.push(t);
            }
        }
        let mut out = Vec::with_capacity(grouped.len());
        for (key, succ) in grouped {
            let mut outcomes = Vec::with_capacity(succ.len());
            for t in succ {
                let v = self.eval_at(&t, &f)?;
                outcomes.push((t, v));
            }
            out.push(Hint {
                choice: key.into_iter().collect(),
                verdict: outcomes.iter().all(|(_, v)| *v),
                outcomes,
            });
        }
        Ok(out)
    }

    /// Whether replaying the history from the initial state reproduces the current state.
    pub fn replay_consistent(&self) -> bool {
        self.arena()
            .replay(&self.arena().initial_state(), &self.history)
            .is_ok_and(|s| s == self.state)
    }

    pub fn to_json(&self) -> Value {
        let arena = self.arena();
        let g = arena.graph();
        let agents = |set: AgentSet| set.iter().map(|a| a.symbol()).collect::<Vec<_>>();
        json!({
            "id": self.id,
            "kind": arena.kind().as_str(),
            "graph": serde_json::from_str::<Value>(&g.to_json()).unwrap_or(Value::Null),
            "goal": self.model.goal.map(|v| g.name(v).to_string()),
            "human": agents(self.human),
            "objective": self.objective.to_string(),
            "state": arena.state_to_json(&self.state),
            "state_text": arena.format_state(&self.state),
            "history": self.history.iter().map(|p| arena.profile_to_json(p)).collect::<Vec<_>>(),
            "acting": agents(self.acting_agents()),
            "over": self.is_over(),
            "seed": self.seed,
            "token": self.token,
            "created_ms": self.created_ms,
            "updated_ms": self.updated_ms,
        })
    }

    /// Rebuilds a session from [`Session::to_json`] output by replaying its history.
    pub fn from_json(v: &Value) -> Result<Self, SessionError> {
        let field = |k: &str| {
            v.get(k)
                .ok_or_else(|| SessionError::Invalid(format!("missing field \"{k}\"")))
        };
        let str_field = |k: &str| {
            field(k)?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| SessionError::Invalid(format!("field \"{k}\" must be a string")))
        };
        let id = str_field("id")?;
        let kind: StructureKind = str_field("kind")?.parse()?;
        let graph = Graph::parse(&field("graph")?.to_string()).map_err(GameError::from)?;
        let goal = match v.get("goal") {
            Some(Value::String(name)) => Some(graph.vertex(name).map_err(GameError::from)?),
            _ => None,
        };
        let human = parse_agents_json(field("human")?)?;
        let objective = parse_formula(&str_field("objective")?)?;
        let seed = field("seed")?.as_u64().unwrap_or(0);
        let mut session = Session::new(
            id,
            SessionConfig {
                kind,
                graph,
                goal,
                human,
                objective: Some(objective),
                relations: None,
                seed,
            },
        )?;
        let arena = session.arena().clone();
        let history = field("history")?
            .as_array()
            .ok_or_else(|| SessionError::Invalid("history must be an array".into()))?;
        for p in history {
            let profile = profile_from_json(&arena, p)?;
            session.apply(profile, false)?;
        }
        if let Some(t) = v.get("created_ms").and_then(Value::as_u64) {
            session.created_ms = t;
        }
        if let Some(t) = v.get("updated_ms").and_then(Value::as_u64) {
            session.updated_ms = t;
        }
        Ok(session)
    }
}

fn profile_from_json(arena: &Arena, v: &Value) -> Result<ActionProfile, SessionError> {
    let get = |k: &str| -> Result<Action, SessionError> {
        match v.get(k) {
            Some(a) => Ok(arena.action_from_json(a)?),
            None => Ok(Action::Skip),
        }
    };
    Ok(ActionProfile {
        runner: get("r")?,
        demon: get("d")?,
        angel: match arena.kind() {
            StructureKind::AngelicTb => Some(get("a")?),
            _ => None,
        },
    })
}

/// Parses `["r","d"]` or `"r,d"` into an agent set.
pub fn parse_agents_json(v: &Value) -> Result<AgentSet, SessionError> {
    match v {
        Value::String(s) => parse_agents(s),
        Value::Array(items) => items
            .iter()
            .map(|x| {
                x.as_str()
                    .ok_or_else(|| SessionError::Invalid("agents must be strings".into()))
                    .and_then(|s| Ok(s.parse::<Agent>()?))
            })
            .collect(),
        other => Err(SessionError::Invalid(format!("expected agents, got {other}"))),
    }
}

pub fn parse_agents(s: &str) -> Result<AgentSet, SessionError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| Ok(x.parse::<Agent>()?))
        .collect()
}

/// Thread-safe session registry; each session is locked independently.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&self, mut cfg: SessionConfig) -> Result<Value, SessionError> {
        let mut rng = rand::rng();
        let id = format!("{:016x}", rng.random::<u64>());
        if cfg.seed == 0 {
            cfg.seed = rng.random();
        }
        let session = Session::new(id.clone(), cfg)?;
        let view = session.to_json();
        self.insert(session);
        Ok(view)
    }

    pub fn insert(&self, session: Session) {
        self.sessions
            .write()
            .expect("session registry poisoned")
            .insert(session.id.clone(), Arc::new(Mutex::new(session)));
    }

    /// Runs `f` with exclusive access to one session.
    pub fn with<T, E: From<SessionError>>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<T, E>,
    ) -> Result<T, E> {
        let entry = self
            .sessions
            .read()
            .expect("session registry poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))?;
        let mut guard = entry.lock().expect("session poisoned");
        f(&mut guard)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session registry poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Value {
        let map = self.sessions.read().expect("session registry poisoned");
        let mut ids: Vec<&String> = map.keys().collect();
        ids.sort();
        Value::Array(
            ids.into_iter()
                .map(|id| map[id].lock().expect("session poisoned").to_json())
                .collect(),
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), SessionError> {
        let text = serde_json::to_string_pretty(&self.snapshot()).map_err(|e| SessionError::Invalid(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| SessionError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let store = SessionStore::new();
        if !path.exists() {
            return Ok(store);
        }
        let text =
            std::fs::read_to_string(path).map_err(|e| SessionError::Invalid(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| SessionError::Invalid(e.to_string()))?;
        for item in v
            .as_array()
            .ok_or_else(|| SessionError::Invalid("snapshot must be an array".into()))?
        {
            store.insert(Session::from_json(item)?);
        }
        Ok(store)
    }
}
