//! Positional strategies.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::game::{Action, Agent, AgentSet, Arena, State};

/// Per-agent maps from game-states to choices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StrategyTable {
    pub choices: BTreeMap<Agent, BTreeMap<State, Action>>,
}

impl StrategyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, agent: Agent, state: State, action: Action) {
        self.choices.entry(agent).or_default().insert(state, action);
    }

    pub fn get(&self, agent: Agent, state: &State) -> Option<Action> {
        self.choices.get(&agent).and_then(|m| m.get(state)).copied()
    }

    pub fn agents(&self) -> AgentSet {
        self.choices.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.choices.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// JSON list of `{"agent", "state", "action"}` entries, agents then states in order.
    pub fn to_json(&self, arena: &Arena) -> Value {
        let entries: Vec<Value> = self
            .choices
            .iter()
            .flat_map(|(agent, map)| {
                map.iter().map(move |(s, a)| {
                    json!({
                        "agent": agent.symbol(),
                        "state": arena.state_to_json(s),
                        "action": arena.action_to_json(*a),
                    })
                })
            })
            .collect();
        Value::Array(entries)
    }

    /// Where every entry is legal for its agent.
    pub fn is_legal(&self, arena: &Arena) -> bool {
        self.choices.iter().all(|(agent, map)| {
            map.iter().all(|(s, a)| {
                arena
                    .legal_actions(s, *agent)
                    .map(|legal| legal.contains(a))
                    .unwrap_or(false)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::StructureKind;
    use crate::graph::Graph;

    #[test]
    fn insert_lookup_and_serialize() {
        let g = Graph::from_pairs(&["v0", "vg"], &[("v0", "vg")], "v0", Some("vg")).unwrap();
        let a = Arena::new(StructureKind::Tb, g).unwrap();
        let s = a.initial_state();
        let mut t = StrategyTable::new();
        let e = a.action_by_names("v0", "vg").unwrap();
        t.insert(Agent::Runner, s, e);
        assert_eq!(t.get(Agent::Runner, &s), Some(e));
        assert_eq!(t.get(Agent::Demon, &s), None);
        assert!(t.is_legal(&a));
        assert_eq!(
            t.to_json(&a).to_string(),
            r#"[{"agent":"r","state":{"edges":[0],"position":"v0","owner":"r"},"action":["v0","vg"]}]"#
        );
        t.insert(Agent::Demon, s, e);
        assert!(!t.is_legal(&a));
    }
}
