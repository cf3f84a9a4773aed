//! Static and dynamic minimum cuts.

use std::collections::{BTreeSet, VecDeque};

use serde_json::{json, Value};
use thiserror::Error;

use crate::atl::{AtlError, Checker, GameModel, PathFormula, StateFormula, StrategyTable};
use crate::game::{Agent, AgentSet, Arena, GameError, State, StructureKind};
use crate::graph::{EdgeId, EdgeSet, Graph, GraphError, VertexId};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MincutError {
    #[error("source and target must differ")]
    SameEndpoints,
    #[error("a global cut needs at least two vertices")]
    TooFewVertices,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Atl(#[from] AtlError),
}

impl From<GameError> for MincutError {
    fn from(e: GameError) -> Self {
        MincutError::Atl(AtlError::Game(e))
    }
}

/// A minimum `from`–`to` cut with the source side of the final residual graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticCut {
    pub from: VertexId,
    pub to: VertexId,
    pub size: usize,
    pub cut_edges: EdgeSet,
    pub source_side: Vec<VertexId>,
}

impl StaticCut {
    pub fn to_json(&self, g: &Graph) -> Value {
        json!({
            "from": g.name(self.from),
            "to": g.name(self.to),
            "size": self.size,
            "cut_edges": edge_list(g, self.cut_edges),
            "source_side": self.source_side.iter().map(|v| g.name(*v)).collect::<Vec<_>>(),
        })
    }
}

fn edge_list(g: &Graph, edges: EdgeSet) -> Vec<[&str; 2]> {
    edges
        .iter()
        .map(|e| {
            let (a, b) = g.edge(e);
            [g.name(a), g.name(b)]
        })
        .collect()
}

/// Unit-capacity maximum flow by shortest augmenting paths, restricted to `edges`.
pub fn static_min_cut_in(g: &Graph, edges: EdgeSet, from: VertexId, to: VertexId) -> Result<StaticCut, MincutError> {
    check_vertex(g, from)?;
    check_vertex(g, to)?;
    if from == to {
        return Err(MincutError::SameEndpoints);
    }
    let n = g.vertex_count();
    let live: Vec<EdgeId> = edges.iter().filter(|e| e.0 < g.edge_count()).collect();
    let mut flow = vec![false; g.edge_count()];
    let mut size = 0;
    loop {
        // Residual arcs: unused edges forward, used edges backward.
        let mut prev: Vec<Option<(EdgeId, bool)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[from.0] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &e in &live {
                let (a, b) = g.edge(e);
                let step = if a == v && !flow[e.0] {
                    Some((b, true))
                } else if b == v && flow[e.0] {
                    Some((a, false))
                } else {
                    None
                };
                if let Some((w, forward)) = step {
                    if !seen[w.0] {
                        seen[w.0] = true;
                        prev[w.0] = Some((e, forward));
                        queue.push_back(w);
                    }
                }
            }
        }
        if !seen[to.0] {
            let source_side: Vec<VertexId> = (0..n).filter(|&v| seen[v]).map(VertexId).collect();
            let cut_edges = live
                .iter()
                .copied()
                .filter(|&e| {
                    let (a, b) = g.edge(e);
                    seen[a.0] && !seen[b.0]
                })
                .collect();
            return Ok(StaticCut {
                from,
                to,
                size,
                cut_edges,
                source_side,
            });
        }
        let mut v = to;
        while v != from {
            let (e, forward) = prev[v.0].expect("augmenting path is connected");
            flow[e.0] = forward;
            let (a, b) = g.edge(e);
            v = if forward { a } else { b };
        }
        size += 1;
    }
}

pub fn static_min_cut(g: &Graph, from: VertexId, to: VertexId) -> Result<StaticCut, MincutError> {
    static_min_cut_in(g, g.all_edges(), from, to)
}

fn check_vertex(g: &Graph, v: VertexId) -> Result<(), MincutError> {
    if v.0 < g.vertex_count() {
        Ok(())
    } else {
        Err(GraphError::VertexOutOfRange(v.0).into())
    }
}

/// Largest family of pairwise edge-disjoint directed paths, by exhaustive
/// packing of simple paths.
pub fn edge_disjoint_paths(g: &Graph, from: VertexId, to: VertexId) -> Result<usize, MincutError> {
    check_vertex(g, from)?;
    check_vertex(g, to)?;
    if from == to {
        return Err(MincutError::SameEndpoints);
    }
    let mut paths = Vec::new();
    let mut on_path = vec![false; g.vertex_count()];
    simple_paths(g, from, to, &mut on_path, EdgeSet::EMPTY, &mut paths);
    Ok(pack(&paths, 0, EdgeSet::EMPTY))
}

fn simple_paths(g: &Graph, v: VertexId, to: VertexId, on_path: &mut Vec<bool>, used: EdgeSet, out: &mut Vec<EdgeSet>) {
    if v == to {
        out.push(used);
        return;
    }
    on_path[v.0] = true;
    for (i, &(a, b)) in g.edges().iter().enumerate() {
        if a == v && !on_path[b.0] {
            simple_paths(g, b, to, on_path, used.with(EdgeId(i)), out);
        }
    }
    on_path[v.0] = false;
}

fn pack(paths: &[EdgeSet], start: usize, used: EdgeSet) -> usize {
    let mut best = 0;
    for i in start..paths.len() {
        if paths[i].intersection(used).is_empty() {
            best = best.max(1 + pack(paths, i + 1, used.union(paths[i])));
        }
    }
    best
}

/// Minimum over ordered vertex pairs of the directed pair cut.
pub fn global_min_cut(g: &Graph) -> Result<StaticCut, MincutError> {
    if g.vertex_count() < 2 {
        return Err(MincutError::TooFewVertices);
    }
    let mut best: Option<StaticCut> = None;
    for s in g.vertices() {
        for t in g.vertices() {
            if s == t {
                continue;
            }
            let cut = static_min_cut(g, s, t)?;
            if best.as_ref().is_none_or(|b| cut.size < b.size) {
                best = Some(cut);
            }
        }
    }
    Ok(best.expect("at least one ordered pair"))
}

/// Whether the goal is unreachable from the runner's position over the remaining edges.
pub fn disconnected(arena: &Arena, s: &State, goal: VertexId) -> Result<bool, MincutError> {
    arena.validate(s)?;
    check_vertex(arena.graph(), goal)?;
    Ok(!arena.has_path(s.edges, s.position, goal))
}

/// Least number of demon deletions that disconnects the runner from the goal
/// in the turn-based game, with the witness and the deleted edges per play.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicCut {
    pub demon_moves: usize,
    /// Distinct sets of edges deleted before disconnection, one per play class.
    pub cut_edges: Vec<EdgeSet>,
    pub witness: StrategyTable,
    /// Verdict of the exact-position reading `<<d>> T U[2d] (<<>> G !g)`.
    pub exact_reading: bool,
}

impl DynamicCut {
    pub fn to_json(&self, arena: &Arena) -> Value {
        let g = arena.graph();
        json!({
            "demon_moves": self.demon_moves,
            "cut_edges": self.cut_edges.iter().map(|c| edge_list(g, *c)).collect::<Vec<_>>(),
            "witness": self.witness.to_json(arena),
            "exact_reading": self.exact_reading,
        })
    }
}

/// `<<>> G !g`: the goal is out of reach for good.
pub fn cut_off() -> StateFormula {
    StateFormula::exists(
        AgentSet::EMPTY,
        PathFormula::globally(PathFormula::state(StateFormula::negation(StateFormula::goal()))),
    )
}

/// `<<d>> !g U[<=2d] <<>> G !g`.
pub fn dynamic_cut_formula(d: usize) -> StateFormula {
    StateFormula::exists(
        AgentSet::single(Agent::Demon),
        PathFormula::until_within(
            2 * d,
            PathFormula::state(StateFormula::negation(StateFormula::goal())),
            PathFormula::state(cut_off()),
        ),
    )
}

/// `<<d>> T U[2d] <<>> G !g`, the exact-position reading.
pub fn exact_cut_formula(d: usize) -> StateFormula {
    StateFormula::exists(
        AgentSet::single(Agent::Demon),
        PathFormula::bounded_until(2 * d, PathFormula::truth(), PathFormula::state(cut_off())),
    )
}

/// The game-theoretic minimum cut, or `None` when the runner can always reach the goal.
pub fn dynamic_min_cut(g: &Graph, v0: VertexId, vg: VertexId) -> Result<Option<DynamicCut>, MincutError> {
    check_vertex(g, v0)?;
    check_vertex(g, vg)?;
    if v0 == vg {
        return Err(MincutError::SameEndpoints);
    }
    let arena = Arena::new(StructureKind::Tb, g.with_endpoints(v0, Some(vg)))?;
    let model = GameModel::new(arena.clone(), Some(vg));
    let root = arena.initial_state();
    let mut checker = Checker::new(model, &[root])?;
    for d in 0..=g.edge_count() {
        let f = dynamic_cut_formula(d);
        let out = checker.check(&root, &f)?;
        if !out.verdict {
            continue;
        }
        let witness = out.witness.unwrap_or_default();
        let cut_edges = deleted_sets(&arena, &root, vg, &witness);
        let exact_reading = checker.holds(&root, &exact_cut_formula(d))?;
        return Ok(Some(DynamicCut {
            demon_moves: d,
            cut_edges,
            witness,
            exact_reading,
        }));
    }
    Ok(None)
}

/// Edges deleted up to the first disconnected state on every play in which
/// the demon follows `witness`.
fn deleted_sets(arena: &Arena, root: &State, goal: VertexId, witness: &StrategyTable) -> Vec<EdgeSet> {
    let mut out = BTreeSet::new();
    let mut stack = vec![*root];
    while let Some(s) = stack.pop() {
        if !arena.has_path(s.edges, s.position, goal) {
            out.insert(root.edges.difference(s.edges).bits());
            continue;
        }
        for (p, t) in arena.successors(&s) {
            if s.owner == Some(Agent::Demon) {
                if let Some(a) = witness.get(Agent::Demon, &s) {
                    if a != p.demon {
                        continue;
                    }
                }
            }
            stack.push(t);
        }
    }
    out.into_iter().map(EdgeSet::from_bits).collect()
}
