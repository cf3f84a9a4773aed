mod common;

use std::collections::BTreeMap;

use common::brute_cut;
use proptest::prelude::*;
use sabotage_core::atl::{brute_force_check, check_state, GameModel, PathFormula, StateFormula, DEFAULT_BUDGET};
use sabotage_core::mincut::{edge_disjoint_paths, static_min_cut};
use sabotage_core::session::{Session, SessionConfig};
use sabotage_core::{Agent, AgentSet, Arena, Graph, StructureKind, VertexId};

/// A loopless digraph on `n` vertices from a bit mask over ordered pairs.
fn graph_strategy(max_n: usize, max_edges: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(move |n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let m = pairs.len();
        proptest::sample::subsequence(pairs, 1..=max_edges.min(m)).prop_map(move |chosen| {
            let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let edges = chosen.iter().map(|&(a, b)| (names[a].clone(), names[b].clone()));
            Graph::new(names.iter().map(String::as_str), edges, "0", Some(&names[n - 1])).unwrap()
        })
    })
}

fn leaf() -> impl Strategy<Value = PathFormula> {
    prop_oneof![
        Just(PathFormula::goal()),
        Just(PathFormula::state(StateFormula::negation(StateFormula::goal()))),
        Just(PathFormula::truth()),
        Just(PathFormula::state(StateFormula::exists(
            AgentSet::single(Agent::Demon),
            PathFormula::next(PathFormula::truth())
        ))),
    ]
}

fn path() -> impl Strategy<Value = PathFormula> {
    (leaf(), leaf(), 0..8usize, 0..4usize).prop_map(|(a, b, op, k)| match op {
        0 => PathFormula::finally(a),
        1 => PathFormula::globally(a),
        2 => PathFormula::next(a),
        3 => PathFormula::until(a, b),
        4 => PathFormula::until_within(k, a, b),
        5 => PathFormula::finally_within(k, a),
        6 => PathFormula::bounded_until(k, a, b),
        _ => PathFormula::globally(PathFormula::finally(a)),
    })
}

fn formula() -> impl Strategy<Value = StateFormula> {
    let coalition = prop_oneof![
        Just(AgentSet::EMPTY),
        Just(AgentSet::single(Agent::Runner)),
        Just(AgentSet::single(Agent::Demon)),
        Just(AgentSet::RUNNER_DEMON),
    ];
    (coalition, any::<bool>(), any::<bool>(), path()).prop_map(|(c, dual, negate, p)| {
        let f = if dual {
            StateFormula::forall(c, p)
        } else {
            StateFormula::exists(c, p)
        };
        if negate {
            StateFormula::negation(f)
        } else {
            f
        }
    })
}

fn kind() -> impl Strategy<Value = StructureKind> {
    prop_oneof![Just(StructureKind::Tb), Just(StructureKind::Con)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_size_is_disjoint_paths(g in graph_strategy(4, 6)) {
        for s in g.vertices() {
            for t in g.vertices().filter(|&t| t != s) {
                let cut = static_min_cut(&g, s, t).unwrap();
                prop_assert_eq!(cut.size, edge_disjoint_paths(&g, s, t).unwrap());
                prop_assert_eq!(cut.size, brute_cut(&g, s, t));
            }
        }
    }

    #[test]
    fn solver_matches_oracle(g in graph_strategy(3, 4), f in formula(), kind in kind()) {
        let arena = Arena::new(kind, g).unwrap();
        let model = GameModel::from_arena(arena);
        let s0 = model.arena.initial_state();
        match brute_force_check(&model, &s0, &f, 300_000) {
            Ok(expected) => match check_state(&model, &s0, &f) {
                Ok(out) => prop_assert_eq!(out.verdict, expected, "{} on {}", f, model.arena.graph().to_json()),
                // Outside the fixed-point core; only the oracle decides it.
                Err(sabotage_core::atl::AtlError::UnsupportedNesting(_)) => {}
                Err(e) => prop_assert!(false, "{e}"),
            },
            Err(sabotage_core::atl::AtlError::Resource { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn turn_based_determinacy(g in graph_strategy(4, 6), goal in 0..4usize) {
        let goal = VertexId(goal % g.vertex_count());
        let model = GameModel::new(Arena::new(StructureKind::Tb, g).unwrap(), Some(goal));
        let s0 = model.arena.initial_state();
        let reach = StateFormula::exists(AgentSet::single(Agent::Runner), PathFormula::finally(PathFormula::goal()));
        let avoid = StateFormula::exists(
            AgentSet::single(Agent::Demon),
            PathFormula::globally(PathFormula::state(StateFormula::negation(StateFormula::goal()))),
        );
        let r = check_state(&model, &s0, &reach).unwrap().verdict;
        let d = check_state(&model, &s0, &avoid).unwrap().verdict;
        prop_assert_ne!(r, d);
        prop_assert_eq!(r, brute_force_check(&model, &s0, &reach, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn session_history_replays(g in graph_strategy(3, 4), kind in kind(), picks in proptest::collection::vec(any::<usize>(), 0..8)) {
        let goal = g.goal();
        let mut session = Session::new("p".into(), SessionConfig {
            kind,
            graph: g,
            goal,
            human: AgentSet::single(Agent::Runner),
            objective: None,
            relations: None,
            seed: 3,
        }).unwrap();
        for pick in picks {
            if session.is_over() {
                break;
            }
            let legal = session.legal_moves().unwrap();
            if legal.is_empty() {
                session.solver_move(Some(session.token)).unwrap();
            } else {
                let choice: BTreeMap<Agent, _> = legal
                    .into_iter()
                    .map(|(a, acts)| (a, acts[pick % acts.len()]))
                    .collect();
                session.human_move(Some(session.token), &choice).unwrap();
            }
            prop_assert!(session.replay_consistent());
            prop_assert_eq!(session.token as usize, session.history.len());
        }
    }
}
