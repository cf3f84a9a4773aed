mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::*;
use sabotage_core::atl::{check_state, parse_formula};
use sabotage_core::session::{SessionConfig, SessionError, SessionStore};
use sabotage_core::{Agent, AgentSet, StructureKind};

fn config(kind: StructureKind, graph: sabotage_core::Graph, human: AgentSet) -> SessionConfig {
    let goal = graph.goal();
    SessionConfig {
        kind,
        graph,
        goal,
        human,
        objective: None,
        relations: None,
        seed: 11,
    }
}

#[test]
fn same_token_moves_race_and_one_wins() {
    for _ in 0..20 {
        let store = Arc::new(SessionStore::new());
        let view = store
            .create(config(StructureKind::Con, triangle(), AgentSet::single(Agent::Runner)))
            .unwrap();
        let id = view["id"].as_str().unwrap().to_string();
        let handles: Vec<_> = [("0", "1"), ("0", "2")]
            .into_iter()
            .map(|(a, b)| {
                let store = Arc::clone(&store);
                let id = id.clone();
                std::thread::spawn(move || {
                    store.with(&id, |s| {
                        let act = s.arena().action_by_names(a, b)?;
                        s.human_move(Some(0), &BTreeMap::from([(Agent::Runner, act)]))
                    })
                })
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        let ok = results.iter().filter(|r| r.is_ok()).count();
        let conflicts = results
            .iter()
            .filter(|r| matches!(r, Err(SessionError::Conflict { .. })))
            .count();
        assert_eq!((ok, conflicts), (1, 1));
        assert!(store
            .with(&id, |s| Ok::<_, SessionError>(s.replay_consistent()))
            .unwrap());
    }
}

#[test]
fn solver_plays_out_a_turn_based_escape_game() {
    let store = SessionStore::new();
    let view = store
        .create(config(StructureKind::Tb, escape(), AgentSet::single(Agent::Runner)))
        .unwrap();
    let id = view["id"].as_str().unwrap().to_string();
    // A greedy runner: always the first legal move.
    for _ in 0..40 {
        let over = store
            .with(&id, |s| {
                if s.is_over() {
                    return Ok::<_, SessionError>(true);
                }
                if s.acting_agents().contains(Agent::Runner) {
                    let first = s.legal_moves()?[&Agent::Runner][0];
                    s.human_move(None, &BTreeMap::from([(Agent::Runner, first)]))?;
                } else {
                    let out = s.solver_move(None)?;
                    assert!(!out.random, "the demon wins the escape example");
                }
                Ok(false)
            })
            .unwrap();
        if over {
            break;
        }
    }
    store
        .with(&id, |s| {
            let reached = s.states.iter().any(|st| Some(st.position) == s.model.goal);
            assert!(!reached);
            assert!(s.replay_consistent());
            Ok::<_, SessionError>(())
        })
        .unwrap();
}

#[test]
fn hints_agree_with_direct_checks() {
    let store = SessionStore::new();
    let view = store
        .create(config(StructureKind::Tb, escape(), AgentSet::single(Agent::Demon)))
        .unwrap();
    let id = view["id"].as_str().unwrap().to_string();
    store
        .with(&id, |s| {
            s.solver_move(None)?;
            let f = parse_formula("<<d>> F[<=6] (<<>> G !g)").unwrap();
            let hints = s.hint(Some(&f))?;
            assert_eq!(hints.len(), s.legal_moves()?[&Agent::Demon].len());
            for h in &hints {
                for (state, verdict) in &h.outcomes {
                    assert_eq!(*verdict, check_state(&s.model, state, &f)?.verdict);
                }
            }
            assert!(hints.iter().any(|h| h.verdict));
            assert!(hints.iter().any(|h| !h.verdict));
            Ok::<_, SessionError>(())
        })
        .unwrap();
}

#[test]
fn angelic_sessions_rotate_owners() {
    let store = SessionStore::new();
    let view = store
        .create(config(
            StructureKind::AngelicTb,
            two_cycle(),
            AgentSet::single(Agent::Runner),
        ))
        .unwrap();
    let id = view["id"].as_str().unwrap().to_string();
    store
        .with(&id, |s| {
            let first = s.legal_moves()?[&Agent::Runner][0];
            s.human_move(None, &BTreeMap::from([(Agent::Runner, first)]))?;
            assert_eq!(s.state.owner, Some(Agent::Demon));
            s.solver_move(None)?;
            assert_eq!(s.state.owner, Some(Agent::Angel));
            s.solver_move(None)?;
            assert_eq!(s.state.owner, Some(Agent::Runner));
            assert!(s.replay_consistent());
            Ok::<_, SessionError>(())
        })
        .unwrap();
}
