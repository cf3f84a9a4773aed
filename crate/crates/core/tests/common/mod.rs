#![allow(dead_code)]

use sabotage_core::atl::GameModel;
use sabotage_core::{Arena, EdgeSet, Graph, StructureKind, VertexId};

/// A graph instance with its start and goal.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub start: VertexId,
    pub goal: VertexId,
}

impl Instance {
    pub fn model(&self, kind: StructureKind) -> GameModel {
        let arena = Arena::new(kind, self.graph.with_endpoints(self.start, Some(self.goal))).unwrap();
        GameModel::new(arena, Some(self.goal))
    }

    pub fn adjacent(&self) -> bool {
        self.graph.edge_id(self.start, self.goal).is_some()
    }
}

fn weakly_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in pairs {
            for (x, y) in [(a, b), (b, a)] {
                if x == v && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Every weakly connected loopless digraph on 2 or 3 vertices with 1 to 4 edges.
pub fn graphs() -> Vec<Graph> {
    let mut out = Vec::new();
    for n in 2..=3usize {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let all: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        for mask in 1u32..(1 << all.len()) {
            let count = mask.count_ones() as usize;
            if count > 4 {
                continue;
            }
            let pairs: Vec<(usize, usize)> = all
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| *p)
                .collect();
            if !weakly_connected(n, &pairs) {
                continue;
            }
            let edges: Vec<(String, String)> = pairs
                .iter()
                .map(|&(a, b)| (names[a].clone(), names[b].clone()))
                .collect();
            out.push(Graph::new(names.iter().map(String::as_str), edges, "0", None).unwrap());
        }
    }
    out
}

/// Every family graph with every ordered start/goal pair, equal ones included.
pub fn family() -> Vec<Instance> {
    let mut out = Vec::new();
    for g in graphs() {
        for start in g.vertices() {
            for goal in g.vertices() {
                out.push(Instance {
                    graph: g.with_endpoints(start, Some(goal)),
                    start,
                    goal,
                });
            }
        }
    }
    out
}

/// Family instances with distinct start and goal.
pub fn distinct_family() -> Vec<Instance> {
    family().into_iter().filter(|i| i.start != i.goal).collect()
}

pub fn triangle() -> Graph {
    Graph::from_pairs(&["0", "1", "2"], &[("0", "1"), ("0", "2"), ("1", "2")], "0", Some("2")).unwrap()
}

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
    .unwrap()
}

pub fn single_edge() -> Graph {
    Graph::from_pairs(&["v0", "vg"], &[("v0", "vg")], "v0", Some("vg")).unwrap()
}

pub fn chain() -> Graph {
    Graph::from_pairs(&["v", "u", "vg"], &[("v", "u"), ("u", "vg")], "v", Some("vg")).unwrap()
}

pub fn diamond() -> Graph {
    Graph::from_pairs(
        &["v0", "u", "w", "g"],
        &[("v0", "u"), ("v0", "w"), ("u", "g"), ("w", "g")],
        "v0",
        Some("g"),
    )
    .unwrap()
}

pub fn two_cycle() -> Graph {
    Graph::from_pairs(&["0", "1"], &[("0", "1"), ("1", "0")], "0", Some("1")).unwrap()
}

pub fn model_of_graph(kind: StructureKind, g: &Graph) -> GameModel {
    GameModel::from_arena(Arena::new(kind, g.clone()).unwrap())
}

/// Smallest number of edges whose removal disconnects `s` from `t`, by subset enumeration.
pub fn brute_cut(g: &Graph, s: VertexId, t: VertexId) -> usize {
    (0u64..1 << g.edge_count())
        .filter(|&bits| {
            !g.has_path(g.all_edges().difference(EdgeSet::from_bits(bits)), s, t)
                .unwrap()
        })
        .map(|bits| bits.count_ones() as usize)
        .min()
        .unwrap()
}
