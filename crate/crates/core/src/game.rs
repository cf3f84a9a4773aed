//! Sabotage game structures: turn-based, concurrent, general and angelic turn-based.
//!
//! An [`Arena`] fixes a structure kind over a graph. Edge sets in its states
//! range over the arena's edge universe: the graph's edges for the plain
//! kinds, and the graph's edges followed by the remaining pairs of `V × V`
//! (row-major) for the angelic kind, so that the angel can build edges.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::{reachable, EdgeId, EdgeSet, Graph, GraphError, VertexId, MAX_EDGES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructureKind {
    #[serde(rename = "tb")]
    Tb,
    #[serde(rename = "con")]
    Con,
    #[serde(rename = "gen")]
    Gen,
    #[serde(rename = "angelic")]
    AngelicTb,
}

impl StructureKind {
    pub const ALL: [StructureKind; 4] = [
        StructureKind::Tb,
        StructureKind::Con,
        StructureKind::Gen,
        StructureKind::AngelicTb,
    ];

    /// Whether states carry an owner tag.
    pub fn is_turn_based(self) -> bool {
        matches!(self, StructureKind::Tb | StructureKind::AngelicTb)
    }

    pub fn agents(self) -> AgentSet {
        match self {
            StructureKind::AngelicTb => AgentSet::ALL,
            _ => AgentSet::RUNNER_DEMON,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StructureKind::Tb => "tb",
            StructureKind::Con => "con",
            StructureKind::Gen => "gen",
            StructureKind::AngelicTb => "angelic",
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StructureKind {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tb" => Ok(StructureKind::Tb),
            "con" => Ok(StructureKind::Con),
            "gen" => Ok(StructureKind::Gen),
            "angelic" | "angelic_tb" | "angelic-tb" => Ok(StructureKind::AngelicTb),
            _ => Err(GameError::Parse(format!(
                "unknown structure kind \"{s}\" (expected tb, con, gen or angelic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Agent {
    #[serde(rename = "r")]
    Runner,
    #[serde(rename = "d")]
    Demon,
    #[serde(rename = "a")]
    Angel,
}

impl Agent {
    pub const ALL: [Agent; 3] = [Agent::Runner, Agent::Demon, Agent::Angel];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Agent::Runner => "r",
            Agent::Demon => "d",
            Agent::Angel => "a",
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Agent {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "r" | "runner" => Ok(Agent::Runner),
            "d" | "demon" => Ok(Agent::Demon),
            "a" | "angel" => Ok(Agent::Angel),
            _ => Err(GameError::UnknownAgent(s.to_string())),
        }
    }
}

/// A set of agents, e.g. a coalition.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentSet(u8);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);
    pub const RUNNER_DEMON: AgentSet = AgentSet(0b011);
    pub const ALL: AgentSet = AgentSet(0b111);

    pub fn single(a: Agent) -> Self {
        AgentSet(1 << a.index())
    }

    pub fn contains(self, a: Agent) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn with(self, a: Agent) -> Self {
        AgentSet(self.0 | (1 << a.index()))
    }

    pub fn is_subset(self, other: AgentSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: AgentSet) -> Self {
        AgentSet(self.0 | other.0)
    }

    pub fn difference(self, other: AgentSet) -> Self {
        AgentSet(self.0 & !other.0)
    }

    pub fn intersection(self, other: AgentSet) -> Self {
        AgentSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Agent> {
        Agent::ALL.into_iter().filter(move |a| self.contains(*a))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl FromIterator<Agent> for AgentSet {
    fn from_iter<I: IntoIterator<Item = Agent>>(iter: I) -> Self {
        iter.into_iter().fold(AgentSet::EMPTY, AgentSet::with)
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Agent::symbol).collect();
        write!(f, "{}", names.join(","))
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// A single agent's choice: an edge of the universe, or skip.
///
/// Ordered by edge enumeration with skip last, which is the tie-break order
/// used by strategy synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Edge(EdgeId),
    Skip,
}

/// One choice per agent of the structure. `angel` is present only for the angelic kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionProfile {
    pub runner: Action,
    pub demon: Action,
    pub angel: Option<Action>,
}

impl ActionProfile {
    pub fn get(&self, agent: Agent) -> Action {
        match agent {
            Agent::Runner => self.runner,
            Agent::Demon => self.demon,
            Agent::Angel => self.angel.unwrap_or(Action::Skip),
        }
    }

    pub fn set(&mut self, agent: Agent, action: Action) {
        match agent {
            Agent::Runner => self.runner = action,
            Agent::Demon => self.demon = action,
            Agent::Angel => self.angel = Some(action),
        }
    }
}

/// A game-state `(E', v)`, tagged with the agent to move in turn-based kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub edges: EdgeSet,
    pub position: VertexId,
    pub owner: Option<Agent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlayEnd {
    /// The last state is terminal.
    Maximal,
    /// After the last state the play returns to the state at this index, forever.
    Lasso(usize),
    /// Cut at the enumeration bound.
    Truncated,
}

/// A play: states, the profiles between them, and how it ends.
///
/// For a lasso play `profiles` has one more entry than a finite play: the
/// profile leading from the last state back to the loop start.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Play {
    pub states: Vec<State>,
    pub profiles: Vec<ActionProfile>,
    pub end: PlayEnd,
}

impl Play {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GameError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("agent {agent} does not act in {kind} structures")]
    AgentNotInStructure { agent: Agent, kind: StructureKind },
    #[error("unknown agent \"{0}\"")]
    UnknownAgent(String),
    #[error("illegal action {action} for agent {agent}; legal: [{}]", legal.join(", "))]
    IllegalAction {
        agent: Agent,
        action: String,
        legal: Vec<String>,
    },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("infinite play space; give a bound")]
    UnboundedPlays,
    #[error("edge universe of {0} pairs exceeds {MAX_EDGES}")]
    UniverseTooLarge(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// A sabotage game structure over a graph.
#[derive(Debug, Clone)]
pub struct Arena {
    kind: StructureKind,
    graph: Graph,
    universe: Vec<(VertexId, VertexId)>,
    universe_index: HashMap<(VertexId, VertexId), EdgeId>,
    out_masks: Vec<EdgeSet>,
}

impl Arena {
    pub fn new(kind: StructureKind, graph: Graph) -> Result<Self, GameError> {
        let mut universe: Vec<(VertexId, VertexId)> = graph.edges().to_vec();
        if kind == StructureKind::AngelicTb {
            let n = graph.vertex_count();
            if n * n > MAX_EDGES {
                return Err(GameError::UniverseTooLarge(n * n));
            }
            for x in graph.vertices() {
                for y in graph.vertices() {
                    if graph.edge_id(x, y).is_none() {
                        universe.push((x, y));
                    }
                }
            }
        }
        let universe_index = universe.iter().enumerate().map(|(i, &p)| (p, EdgeId(i))).collect();
        let mut out_masks = vec![EdgeSet::EMPTY; graph.vertex_count()];
        for (i, &(a, _)) in universe.iter().enumerate() {
            out_masks[a.0] = out_masks[a.0].with(EdgeId(i));
        }
        Ok(Arena {
            kind,
            graph,
            universe,
            universe_index,
            out_masks,
        })
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn agents(&self) -> AgentSet {
        self.kind.agents()
    }

    pub fn universe(&self) -> &[(VertexId, VertexId)] {
        &self.universe
    }

    pub fn universe_len(&self) -> usize {
        self.universe.len()
    }

    pub fn universe_edge(&self, from: VertexId, to: VertexId) -> Option<EdgeId> {
        self.universe_index.get(&(from, to)).copied()
    }

    /// The graph's own edges as a universe subset.
    pub fn graph_edges(&self) -> EdgeSet {
        EdgeSet::full(self.graph.edge_count())
    }

    pub fn initial_state(&self) -> State {
        self.state(self.graph_edges(), self.graph.start())
    }

    /// A state at the start of a round: owned by the runner in turn-based kinds.
    pub fn state(&self, edges: EdgeSet, position: VertexId) -> State {
        State {
            edges,
            position,
            owner: self.kind.is_turn_based().then_some(Agent::Runner),
        }
    }

    pub fn out_edges(&self, edges: EdgeSet, v: VertexId) -> EdgeSet {
        edges.intersection(self.out_masks[v.0])
    }

    pub fn has_path(&self, edges: EdgeSet, from: VertexId, to: VertexId) -> bool {
        reachable(&self.universe, edges, from, self.graph.vertex_count())[to.0]
    }

    pub fn validate(&self, s: &State) -> Result<(), GameError> {
        if s.position.0 >= self.graph.vertex_count() {
            return Err(GameError::InvalidState(format!(
                "position {} out of range",
                s.position.0
            )));
        }
        if !s.edges.is_subset(EdgeSet::full(self.universe.len())) {
            return Err(GameError::InvalidState("edge set outside the arena".into()));
        }
        match (self.kind, s.owner) {
            (StructureKind::Tb, Some(Agent::Angel)) => {
                Err(GameError::InvalidState("angel owner in a tb structure".into()))
            }
            (k, None) if k.is_turn_based() => Err(GameError::InvalidState(format!("{k} states need an owner"))),
            (k, Some(_)) if !k.is_turn_based() => Err(GameError::InvalidState(format!("{k} states carry no owner"))),
            _ => Ok(()),
        }
    }

    fn complement(&self, edges: EdgeSet) -> EdgeSet {
        EdgeSet::full(self.universe.len()).difference(edges)
    }

    fn edge_actions(set: EdgeSet) -> impl Iterator<Item = Action> {
        set.iter().map(Action::Edge)
    }

    /// Legal choices of `agent` at `s`, in tie-break order.
    pub fn legal_actions(&self, s: &State, agent: Agent) -> Result<Vec<Action>, GameError> {
        if !self.agents().contains(agent) {
            return Err(GameError::AgentNotInStructure { agent, kind: self.kind });
        }
        self.validate(s)?;
        Ok(self.actions_unchecked(s, agent))
    }

    pub(crate) fn actions_unchecked(&self, s: &State, agent: Agent) -> Vec<Action> {
        let out = self.out_edges(s.edges, s.position);
        match self.kind {
            StructureKind::Tb => match (s.owner, agent) {
                (Some(Agent::Runner), Agent::Runner) => Self::edge_actions(out).collect(),
                (Some(Agent::Demon), Agent::Demon) => Self::edge_actions(s.edges).collect(),
                _ => vec![Action::Skip],
            },
            StructureKind::Con => match agent {
                Agent::Runner => Self::edge_actions(out).collect(),
                _ => Self::edge_actions(s.edges).collect(),
            },
            StructureKind::Gen => {
                let set = if agent == Agent::Runner { out } else { s.edges };
                Self::edge_actions(set).chain(std::iter::once(Action::Skip)).collect()
            }
            StructureKind::AngelicTb => {
                let set = match (s.owner, agent) {
                    (Some(Agent::Runner), Agent::Runner) => out,
                    (Some(Agent::Demon), Agent::Demon) => s.edges,
                    (Some(Agent::Angel), Agent::Angel) => self.complement(s.edges),
                    _ => EdgeSet::EMPTY,
                };
                if set.is_empty() {
                    vec![Action::Skip]
                } else {
                    Self::edge_actions(set).collect()
                }
            }
        }
    }

    pub fn format_action(&self, a: Action) -> String {
        match a {
            Action::Skip => "skip".to_string(),
            Action::Edge(e) => self.edge_label(e),
        }
    }

    pub fn edge_label(&self, e: EdgeId) -> String {
        let (a, b) = self.universe[e.0];
        format!("({},{})", self.graph.name(a), self.graph.name(b))
    }

    pub fn format_edges(&self, edges: EdgeSet) -> String {
        let items: Vec<String> = edges.iter().map(|e| self.edge_label(e)).collect();
        format!("{{{}}}", items.join(","))
    }

    pub fn format_state(&self, s: &State) -> String {
        let inner = format!("({},{})", self.format_edges(s.edges), self.graph.name(s.position));
        match s.owner {
            Some(o) => format!("({inner},{o})"),
            None => inner,
        }
    }

    pub fn format_profile(&self, p: &ActionProfile) -> String {
        let mut parts = vec![self.format_action(p.runner), self.format_action(p.demon)];
        if let Some(a) = p.angel {
            parts.push(self.format_action(a));
        }
        format!("<{}>", parts.join(", "))
    }

    /// Applies a profile, checking every component for legality.
    pub fn step(&self, s: &State, profile: &ActionProfile) -> Result<State, GameError> {
        self.validate(s)?;
        if (self.kind == StructureKind::AngelicTb) != profile.angel.is_some() {
            return Err(GameError::InvalidState(
                "profile must carry an angel choice exactly in angelic structures".into(),
            ));
        }
        for agent in self.agents().iter() {
            let legal = self.actions_unchecked(s, agent);
            let chosen = profile.get(agent);
            if !legal.contains(&chosen) {
                return Err(GameError::IllegalAction {
                    agent,
                    action: self.format_action(chosen),
                    legal: legal.iter().map(|a| self.format_action(*a)).collect(),
                });
            }
        }
        Ok(self.apply(s, profile))
    }

    /// Transition function without legality checks.
    pub(crate) fn apply(&self, s: &State, p: &ActionProfile) -> State {
        let target = |e: EdgeId| self.universe[e.0].1;
        match self.kind {
            StructureKind::Tb => match p.runner {
                Action::Skip => {
                    let edges = match p.demon {
                        Action::Edge(e) => s.edges.without(e),
                        Action::Skip => s.edges,
                    };
                    State {
                        edges,
                        position: s.position,
                        owner: Some(Agent::Runner),
                    }
                }
                Action::Edge(e) => State {
                    edges: s.edges,
                    position: target(e),
                    owner: Some(Agent::Demon),
                },
            },
            StructureKind::Con | StructureKind::Gen => {
                let (er, ed) = (p.runner, p.demon);
                if er == ed {
                    return *s;
                }
                let edges = match ed {
                    Action::Edge(e) => s.edges.without(e),
                    Action::Skip => s.edges,
                };
                let position = match er {
                    Action::Edge(e) => target(e),
                    Action::Skip => s.position,
                };
                State {
                    edges,
                    position,
                    owner: None,
                }
            }
            StructureKind::AngelicTb => match s.owner {
                Some(Agent::Runner) => State {
                    edges: s.edges,
                    position: match p.runner {
                        Action::Edge(e) => target(e),
                        Action::Skip => s.position,
                    },
                    owner: Some(Agent::Demon),
                },
                Some(Agent::Demon) => State {
                    edges: match p.demon {
                        Action::Edge(e) => s.edges.without(e),
                        Action::Skip => s.edges,
                    },
                    position: s.position,
                    owner: Some(Agent::Angel),
                },
                _ => State {
                    edges: match p.angel {
                        Some(Action::Edge(e)) => s.edges.with(e),
                        _ => s.edges,
                    },
                    position: s.position,
                    owner: Some(Agent::Runner),
                },
            },
        }
    }

    /// Every executable profile with its successor, in lexicographic profile order.
    pub fn successors(&self, s: &State) -> Vec<(ActionProfile, State)> {
        let runner = self.actions_unchecked(s, Agent::Runner);
        let demon = self.actions_unchecked(s, Agent::Demon);
        let angel = if self.kind == StructureKind::AngelicTb {
            self.actions_unchecked(s, Agent::Angel).into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        let mut out = Vec::with_capacity(runner.len() * demon.len() * angel.len());
        for &r in &runner {
            for &d in &demon {
                for &a in &angel {
                    let p = ActionProfile {
                        runner: r,
                        demon: d,
                        angel: a,
                    };
                    out.push((p, self.apply(s, &p)));
                }
            }
        }
        out
    }

    pub fn is_terminal(&self, s: &State) -> bool {
        match self.kind {
            StructureKind::Tb => match s.owner {
                Some(Agent::Demon) => s.edges.is_empty(),
                _ => self.out_edges(s.edges, s.position).is_empty(),
            },
            StructureKind::Con => self.out_edges(s.edges, s.position).is_empty(),
            StructureKind::Gen | StructureKind::AngelicTb => false,
        }
    }

    /// All plays from `start`. Turn-based plays are finite, so `max_len` may be
    /// omitted there; other kinds need a bound on the number of states.
    pub fn enumerate_plays(&self, start: &State, max_len: Option<usize>) -> Result<Vec<Play>, GameError> {
        self.validate(start)?;
        if max_len.is_none() && self.kind != StructureKind::Tb {
            return Err(GameError::UnboundedPlays);
        }
        let mut plays = Vec::new();
        let mut states = vec![*start];
        let mut profiles = Vec::new();
        self.extend_plays(&mut states, &mut profiles, max_len, &mut plays);
        Ok(plays)
    }

    fn extend_plays(
        &self,
        states: &mut Vec<State>,
        profiles: &mut Vec<ActionProfile>,
        max_len: Option<usize>,
        plays: &mut Vec<Play>,
    ) {
        let last = *states.last().expect("plays are non-empty");
        let succ = self.successors(&last);
        if succ.is_empty() {
            plays.push(Play {
                states: states.clone(),
                profiles: profiles.clone(),
                end: PlayEnd::Maximal,
            });
            return;
        }
        if max_len.is_some_and(|m| states.len() >= m) {
            plays.push(Play {
                states: states.clone(),
                profiles: profiles.clone(),
                end: PlayEnd::Truncated,
            });
            return;
        }
        for (p, next) in succ {
            if let Some(idx) = states.iter().position(|s| *s == next) {
                let mut closing = profiles.clone();
                closing.push(p);
                plays.push(Play {
                    states: states.clone(),
                    profiles: closing,
                    end: PlayEnd::Lasso(idx),
                });
                continue;
            }
            states.push(next);
            profiles.push(p);
            self.extend_plays(states, profiles, max_len, plays);
            states.pop();
            profiles.pop();
        }
    }

    /// Replays a profile sequence from `start`, checking legality at every step.
    pub fn replay(&self, start: &State, profiles: &[ActionProfile]) -> Result<State, GameError> {
        profiles.iter().try_fold(*start, |s, p| self.step(&s, p))
    }

    pub fn state_to_json(&self, s: &State) -> Value {
        let edges: Vec<usize> = s.edges.iter().map(|e| e.0).collect();
        let mut obj = json!({
            "edges": edges,
            "position": self.graph.name(s.position),
        });
        if let Some(o) = s.owner {
            obj["owner"] = json!(o.symbol());
        }
        obj
    }

    pub fn state_from_json(&self, v: &Value) -> Result<State, GameError> {
        #[derive(Deserialize)]
        struct Doc {
            edges: Vec<usize>,
            position: String,
            #[serde(default)]
            owner: Option<Agent>,
        }
        let doc: Doc = serde_json::from_value(v.clone()).map_err(|e| GameError::Parse(e.to_string()))?;
        let mut edges = EdgeSet::EMPTY;
        for i in doc.edges {
            if i >= self.universe.len() {
                return Err(GameError::InvalidState(format!("edge index {i} out of range")));
            }
            edges = edges.with(EdgeId(i));
        }
        let s = State {
            edges,
            position: self.graph.vertex(&doc.position)?,
            owner: doc.owner,
        };
        self.validate(&s)?;
        Ok(s)
    }

    pub fn action_to_json(&self, a: Action) -> Value {
        match a {
            Action::Skip => json!("skip"),
            Action::Edge(e) => {
                let (x, y) = self.universe[e.0];
                json!([self.graph.name(x), self.graph.name(y)])
            }
        }
    }

    pub fn action_from_json(&self, v: &Value) -> Result<Action, GameError> {
        match v {
            Value::String(s) if s == "skip" => Ok(Action::Skip),
            Value::Array(pair) if pair.len() == 2 => {
                let name = |i: usize| {
                    pair[i]
                        .as_str()
                        .ok_or_else(|| GameError::Parse("edge endpoints must be strings".into()))
                };
                self.action_by_names(name(0)?, name(1)?)
            }
            other => Err(GameError::Parse(format!(
                "expected \"skip\" or [from, to], got {other}"
            ))),
        }
    }

    pub fn action_by_names(&self, from: &str, to: &str) -> Result<Action, GameError> {
        let (x, y) = (self.graph.vertex(from)?, self.graph.vertex(to)?);
        self.universe_edge(x, y)
            .map(Action::Edge)
            .ok_or_else(|| GameError::Parse(format!("({from},{to}) is not an edge of the arena")))
    }

    pub fn profile_to_json(&self, p: &ActionProfile) -> Value {
        let mut obj = json!({
            "r": self.action_to_json(p.runner),
            "d": self.action_to_json(p.demon),
        });
        if let Some(a) = p.angel {
            obj["a"] = self.action_to_json(a);
        }
        obj
    }

    pub fn play_to_json(&self, play: &Play) -> Value {
        Value::Array(play.states.iter().map(|s| self.state_to_json(s)).collect())
    }

    /// Parses the textual state form: `((E,u),r)`, `(E,u)`, `(({(u,v),(v,t)},u),d)`.
    /// `E` denotes the graph's full edge set and `{}` the empty set.
    pub fn parse_state(&self, text: &str) -> Result<State, GameError> {
        let mut p = StateText {
            chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
        };
        p.expect('(')?;
        let (edges, position, owner) = if p.peek() == Some('(') {
            p.expect('(')?;
            let edges = self.parse_edge_text(&mut p)?;
            p.expect(',')?;
            let v = p.name()?;
            p.expect(')')?;
            p.expect(',')?;
            let o: Agent = p.name()?.parse()?;
            (edges, v, Some(o))
        } else {
            let edges = self.parse_edge_text(&mut p)?;
            p.expect(',')?;
            (edges, p.name()?, None)
        };
        p.expect(')')?;
        if p.pos != p.chars.len() {
            return Err(GameError::Parse(format!(
                "trailing input at offset {} of state text",
                p.pos
            )));
        }
        let owner = match owner {
            None if self.kind.is_turn_based() => Some(Agent::Runner),
            o => o,
        };
        let s = State {
            edges,
            position: self.graph.vertex(&position)?,
            owner,
        };
        self.validate(&s)?;
        Ok(s)
    }

    fn parse_edge_text(&self, p: &mut StateText) -> Result<EdgeSet, GameError> {
        if p.peek() == Some('E') && matches!(p.chars.get(p.pos + 1), Some(',')) {
            p.pos += 1;
            return Ok(self.graph_edges());
        }
        p.expect('{')?;
        let mut set = EdgeSet::EMPTY;
        if p.peek() == Some('}') {
            p.pos += 1;
            return Ok(set);
        }
        loop {
            p.expect('(')?;
            let a = p.name()?;
            p.expect(',')?;
            let b = p.name()?;
            p.expect(')')?;
            match self.action_by_names(&a, &b)? {
                Action::Edge(e) => set = set.with(e),
                Action::Skip => unreachable!(),
            }
            match p.peek() {
                Some(',') => p.pos += 1,
                Some('}') => {
                    p.pos += 1;
                    return Ok(set);
                }
                _ => return Err(GameError::Parse(format!("expected , or }} at offset {}", p.pos))),
            }
        }
    }
}

struct StateText {
    chars: Vec<char>,
    pos: usize,
}

impl StateText {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), GameError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(GameError::Parse(format!(
                "expected '{c}' at offset {} of state text",
                self.pos
            )))
        }
    }

    fn name(&mut self) -> Result<String, GameError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if "(){},".contains(c) {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(GameError::Parse(format!("expected a name at offset {start}")));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_pairs(&["0", "1", "2"], &[("0", "1"), ("0", "2"), ("1", "2")], "0", Some("2")).unwrap()
    }

    fn single_edge() -> Graph {
        Graph::from_pairs(&["v0", "vg"], &[("v0", "vg")], "v0", Some("vg")).unwrap()
    }

    fn edge(a: &Arena, x: &str, y: &str) -> Action {
        a.action_by_names(x, y).unwrap()
    }

    #[test]
    fn turn_based_action_sets() {
        let a = Arena::new(StructureKind::Tb, triangle()).unwrap();
        let mut s = a.initial_state();
        s.owner = Some(Agent::Demon);
        assert_eq!(a.legal_actions(&s, Agent::Demon).unwrap().len(), 3);
        assert_eq!(a.legal_actions(&s, Agent::Runner).unwrap(), vec![Action::Skip]);
        let err = a.legal_actions(&s, Agent::Angel).unwrap_err();
        assert!(matches!(err, GameError::AgentNotInStructure { .. }));
    }

    #[test]
    fn concurrent_and_general_action_sets() {
        let a = Arena::new(StructureKind::Con, triangle()).unwrap();
        let s = a.parse_state("({(1,2)},2)").unwrap();
        assert!(a.legal_actions(&s, Agent::Runner).unwrap().is_empty());
        assert_eq!(a.legal_actions(&s, Agent::Demon).unwrap(), vec![edge(&a, "1", "2")]);
        assert!(a.is_terminal(&s));

        let g = Arena::new(StructureKind::Gen, triangle()).unwrap();
        assert_eq!(
            g.legal_actions(&g.initial_state(), Agent::Runner).unwrap(),
            vec![edge(&g, "0", "1"), edge(&g, "0", "2"), Action::Skip]
        );
    }

    #[test]
    fn concurrent_step_matches_the_opening_move() {
        let a = Arena::new(StructureKind::Con, triangle()).unwrap();
        let s = a.initial_state();
        let p = ActionProfile {
            runner: edge(&a, "0", "1"),
            demon: edge(&a, "0", "2"),
            angel: None,
        };
        let next = a.step(&s, &p).unwrap();
        assert_eq!(next, a.parse_state("({(0,1),(1,2)},1)").unwrap());
        let same = ActionProfile {
            runner: edge(&a, "0", "1"),
            demon: edge(&a, "0", "1"),
            angel: None,
        };
        assert_eq!(a.step(&s, &same).unwrap(), s);
        assert_eq!(a.successors(&s).len(), 6);
    }

    #[test]
    fn general_runner_skip_deletes_only() {
        let a = Arena::new(StructureKind::Gen, triangle()).unwrap();
        let s = a.initial_state();
        let p = ActionProfile {
            runner: Action::Skip,
            demon: edge(&a, "1", "2"),
            angel: None,
        };
        assert_eq!(a.step(&s, &p).unwrap(), a.parse_state("({(0,1),(0,2)},0)").unwrap());
        assert!(!a.is_terminal(&a.parse_state("({},2)").unwrap()));
    }

    #[test]
    fn illegal_actions_name_the_agent() {
        let a = Arena::new(StructureKind::Tb, triangle()).unwrap();
        let s = a.initial_state();
        let p = ActionProfile {
            runner: edge(&a, "1", "2"),
            demon: Action::Skip,
            angel: None,
        };
        let err = a.step(&s, &p).unwrap_err();
        assert_eq!(
            err.to_string(),
            "illegal action (1,2) for agent r; legal: [(0,1), (0,2)]"
        );
    }

    #[test]
    fn terminality_per_kind() {
        let a = Arena::new(StructureKind::Tb, triangle()).unwrap();
        assert!(!a.is_terminal(&a.initial_state()));
        let dead = a.parse_state("(({},1),d)").unwrap();
        assert!(a.is_terminal(&dead));
        assert!(a.successors(&dead).is_empty());
    }

    #[test]
    fn turn_based_plays_are_finite_and_bounded() {
        let a = Arena::new(StructureKind::Tb, triangle()).unwrap();
        let plays = a.enumerate_plays(&a.initial_state(), None).unwrap();
        assert!(!plays.is_empty());
        for p in &plays {
            assert_eq!(p.end, PlayEnd::Maximal);
            assert!(p.len() <= 2 * 3 + 1);
            assert_eq!(a.replay(&p.states[0], &p.profiles).unwrap(), *p.states.last().unwrap());
        }
    }

    #[test]
    fn concurrent_infinite_play_is_a_lasso() {
        let a = Arena::new(StructureKind::Con, single_edge()).unwrap();
        assert_eq!(
            a.enumerate_plays(&a.initial_state(), None).unwrap_err().to_string(),
            "infinite play space; give a bound"
        );
        let plays = a.enumerate_plays(&a.initial_state(), Some(5)).unwrap();
        assert!(plays
            .iter()
            .any(|p| p.end == PlayEnd::Lasso(0) && p.states == vec![a.initial_state()]));
    }

    #[test]
    fn general_plays_contain_the_idle_loop() {
        let a = Arena::new(StructureKind::Gen, triangle()).unwrap();
        let s = a.initial_state();
        let plays = a.enumerate_plays(&s, Some(3)).unwrap();
        assert!(plays.iter().any(|p| p.end == PlayEnd::Lasso(0) && p.states.len() == 1));
    }

    #[test]
    fn angel_builds_and_cycles_turns() {
        let g = Graph::from_pairs(&["0", "1"], &[("0", "1"), ("1", "0")], "0", Some("1")).unwrap();
        let a = Arena::new(StructureKind::AngelicTb, g).unwrap();
        assert_eq!(a.universe_len(), 4);
        let s = a.parse_state("(({(0,1)},1),a)").unwrap();
        let adds = a.legal_actions(&s, Agent::Angel).unwrap();
        assert_eq!(adds.len(), 3);
        let p = ActionProfile {
            runner: Action::Skip,
            demon: Action::Skip,
            angel: Some(edge(&a, "1", "0")),
        };
        let next = a.step(&s, &p).unwrap();
        assert_eq!(next.owner, Some(Agent::Runner));
        assert_eq!(next.edges.len(), 2);

        let full = a.parse_state("(({(0,1),(1,0),(0,0),(1,1)},0),a)").unwrap();
        assert_eq!(a.legal_actions(&full, Agent::Angel).unwrap(), vec![Action::Skip]);
        assert!(a.enumerate_plays(&a.initial_state(), None).is_err());
    }

    #[test]
    fn state_json_round_trip() {
        let a = Arena::new(StructureKind::Tb, triangle()).unwrap();
        let s = a.parse_state("(({(0,1),(1,2)},1),d)").unwrap();
        let v = a.state_to_json(&s);
        assert_eq!(v.to_string(), r#"{"edges":[0,2],"position":"1","owner":"d"}"#);
        assert_eq!(a.state_from_json(&v).unwrap(), s);
        assert_eq!(a.action_from_json(&json!(["0", "2"])).unwrap(), edge(&a, "0", "2"));
        assert_eq!(a.action_from_json(&json!("skip")).unwrap(), Action::Skip);
    }

    #[test]
    fn state_text_forms() {
        let a = Arena::new(StructureKind::Tb, triangle()).unwrap();
        assert_eq!(a.parse_state("((E,0),r)").unwrap(), a.initial_state());
        assert_eq!(a.parse_state("(E, 0)").unwrap(), a.initial_state());
        assert!(a.parse_state("((E,9),r)").is_err());
        assert!(a.parse_state("((E,0),q)").is_err());
        assert_eq!(a.format_state(&a.initial_state()), "(({(0,1),(0,2),(1,2)},0),r)");
    }
}
