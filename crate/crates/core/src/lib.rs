//! Exact solvers and model checkers for sabotage games.
//!
//! The crate covers the graph arena, the four game structures, sabotage modal
//! logic, an ATL* fragment with coalition fixed points and a brute-force
//! positional-strategy oracle, epistemic operators with uniform strategies,
//! static and dynamic cuts, and an in-memory play session.

pub mod atl;
pub mod epistemic;
pub mod game;
pub mod graph;
pub mod mincut;
pub mod session;
pub mod sml;

pub use game::{Action, ActionProfile, Agent, AgentSet, Arena, GameError, Play, PlayEnd, State, StructureKind};
pub use graph::{EdgeId, EdgeSet, Graph, GraphError, VertexId};
