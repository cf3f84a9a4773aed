//! Benchmark fixtures.

use sabotage_core::atl::GameModel;
use sabotage_core::{Arena, Graph, StructureKind};

/// The five-vertex escape graph with start `s` and goal `t`.
pub fn escape() -> Graph {
    Graph::from_pairs(
        &["s", "u", "v", "w", "t"],
        &[
            ("s", "u"),
            ("s", "w"),
            ("u", "v"),
            ("v", "u"),
            ("v", "w"),
            ("w", "v"),
            ("u", "t"),
            ("v", "t"),
            ("w", "t"),
        ],
        "s",
        Some("t"),
    )
    .expect("valid graph")
}

/// A ladder of `rungs` rungs: two rails joined at each rung, start at one
/// corner and goal at the opposite one.
pub fn ladder(rungs: usize) -> Graph {
    let top = |i: usize| format!("a{i}");
    let bottom = |i: usize| format!("b{i}");
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for i in 0..rungs {
        vertices.push(top(i));
        vertices.push(bottom(i));
        edges.push((top(i), bottom(i)));
        if i + 1 < rungs {
            edges.push((top(i), top(i + 1)));
            edges.push((bottom(i), bottom(i + 1)));
        }
    }
    let goal = bottom(rungs - 1);
    Graph::new(vertices, edges, "a0", Some(&goal)).expect("valid graph")
}

pub fn model(kind: StructureKind, graph: Graph) -> GameModel {
    let goal = graph.goal();
    GameModel::new(Arena::new(kind, graph).expect("valid arena"), goal)
}
