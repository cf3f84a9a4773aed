//! ATL* fragment over sabotage game models.
//!
//! [`check_state`] solves coalition formulas with fixed points over an
//! explicit state space; [`brute_force_check`] enumerates positional
//! strategies lazily and evaluates plays directly, and serves as the oracle.

pub mod formula;
pub mod label;
pub mod normalize;
pub mod oracle;
pub mod path;
pub mod solver;
pub mod space;
pub mod strategy;
pub mod variants;

use thiserror::Error;

use crate::game::{AgentSet, Arena, GameError, StructureKind};
use crate::graph::{GraphError, VertexId};

pub use formula::{parse_formula, parse_path, PathFormula, Prop, Quantifier, StateFormula};
pub use label::{label, LabelSet};
pub use normalize::normalize;
pub use oracle::{brute_force_check, DEFAULT_BUDGET};
pub use path::eval_path;
pub use solver::{check_state, check_state_with, CheckOutcome, Checker};
pub use space::StateSpace;
pub use strategy::StrategyTable;
pub use variants::{variant_formula, Variant};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AtlError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown agent \"{0}\" (expected r, d or a)")]
    UnknownAgent(String),
    #[error("temporal operator outside a coalition: {0}")]
    TemporalOutsideCoalition(String),
    #[error("unsupported nesting: {0}")]
    UnsupportedNesting(String),
    #[error("coalition {{{coalition}}} is not within the agents of {kind} structures")]
    CoalitionNotInStructure { coalition: AgentSet, kind: StructureKind },
    #[error("unknown vertex \"{0}\" in formula")]
    UnknownVertex(String),
    #[error("({0},{1}) is not an edge of the arena")]
    UnknownEdge(String, String),
    #[error("agent {0} has no declared indistinguishability relation")]
    MissingRelation(crate::game::Agent),
    #[error("resource limit: {what} ({used} used, budget {budget})")]
    Resource { what: String, used: usize, budget: usize },
    #[error("play is truncated; only maximal or lasso plays can be evaluated")]
    TruncatedPlay,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl From<GraphError> for AtlError {
    fn from(e: GraphError) -> Self {
        AtlError::Game(GameError::Graph(e))
    }
}

/// A sabotage game model: a structure together with an optional goal vertex.
#[derive(Debug, Clone)]
pub struct GameModel {
    pub arena: Arena,
    pub goal: Option<VertexId>,
}

impl GameModel {
    pub fn new(arena: Arena, goal: Option<VertexId>) -> Self {
        GameModel { arena, goal }
    }

    /// The model using the graph's own goal.
    pub fn from_arena(arena: Arena) -> Self {
        let goal = arena.graph().goal();
        GameModel { arena, goal }
    }

    pub fn kind(&self) -> StructureKind {
        self.arena.kind()
    }

    /// Rejects coalitions that mention agents outside the structure.
    pub fn check_agents(&self, f: &StateFormula) -> Result<(), AtlError> {
        let agents = f.agents();
        if agents.is_subset(self.arena.agents()) {
            Ok(())
        } else {
            Err(AtlError::CoalitionNotInStructure {
                coalition: agents.difference(self.arena.agents()),
                kind: self.kind(),
            })
        }
    }
}
