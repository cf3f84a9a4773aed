//! Explicit state spaces of sabotage game structures.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::game::{Action, ActionProfile, Agent, AgentSet, Arena, State};
use crate::graph::{EdgeSet, VertexId};

use super::AtlError;

/// Hard limit on explicit state spaces.
pub const MAX_STATES: usize = 1 << 22;

/// States with their successors, indexed densely.
#[derive(Debug, Clone)]
pub struct StateSpace {
    arena: Arena,
    states: Vec<State>,
    index: HashMap<State, usize>,
    succ: Vec<Vec<(ActionProfile, usize)>>,
}

/// One coalition action at a state with the set of states it may lead to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    /// Choices of the coalition members, in agent order.
    pub choice: Vec<Action>,
    /// Sorted, deduplicated successor indices.
    pub post: Vec<usize>,
}

impl StateSpace {
    /// All states reachable from `roots`.
    pub fn reachable(arena: &Arena, roots: &[State]) -> Result<Self, AtlError> {
        let mut states = Vec::new();
        let mut index = HashMap::new();
        let mut queue = VecDeque::new();
        for r in roots {
            arena.validate(r)?;
            if !index.contains_key(r) {
                index.insert(*r, states.len());
                states.push(*r);
                queue.push_back(*r);
            }
        }
        let mut succ = Vec::new();
        while let Some(s) = queue.pop_front() {
            let mut out = Vec::new();
            for (p, t) in arena.successors(&s) {
                let id = match index.get(&t) {
                    Some(&i) => i,
                    None => {
                        if states.len() >= MAX_STATES {
                            return Err(too_large(states.len()));
                        }
                        index.insert(t, states.len());
                        states.push(t);
                        queue.push_back(t);
                        states.len() - 1
                    }
                };
                out.push((p, id));
            }
            succ.push(out);
        }
        Ok(StateSpace {
            arena: arena.clone(),
            states,
            index,
            succ,
        })
    }

    /// Every state of the structure: all edge subsets, positions and owners.
    pub fn full(arena: &Arena) -> Result<Self, AtlError> {
        let u = arena.universe_len();
        let owners: Vec<Option<Agent>> = if arena.kind().is_turn_based() {
            arena.agents().iter().map(Some).collect()
        } else {
            vec![None]
        };
        let n = arena.graph().vertex_count();
        let total = 1usize
            .checked_shl(u as u32)
            .filter(|_| u < usize::BITS as usize)
            .and_then(|subsets| subsets.checked_mul(n * owners.len()))
            .filter(|&t| t <= MAX_STATES)
            .ok_or_else(|| too_large(usize::MAX))?;
        let mut states = Vec::with_capacity(total);
        for bits in 0..(1u64 << u) {
            for v in 0..n {
                for &owner in &owners {
                    states.push(State {
                        edges: EdgeSet::from_bits(bits),
                        position: VertexId(v),
                        owner,
                    });
                }
            }
        }
        let index: HashMap<State, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let succ = states
            .iter()
            .map(|s| arena.successors(s).into_iter().map(|(p, t)| (p, index[&t])).collect())
            .collect();
        Ok(StateSpace {
            arena: arena.clone(),
            states,
            index,
            succ,
        })
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &State {
        &self.states[i]
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn successors(&self, i: usize) -> &[(ActionProfile, usize)] {
        &self.succ[i]
    }

    pub fn is_terminal(&self, i: usize) -> bool {
        self.succ[i].is_empty()
    }

    /// Groups each state's profiles by the coalition's choices.
    pub fn coalition_moves(&self, coalition: AgentSet) -> Vec<Vec<Move>> {
        self.succ
            .iter()
            .map(|out| {
                let mut groups: BTreeMap<Vec<Action>, Vec<usize>> = BTreeMap::new();
                for (p, t) in out {
                    let key: Vec<Action> = coalition.iter().map(|a| p.get(a)).collect();
                    groups.entry(key).or_default().push(*t);
                }
                groups
                    .into_iter()
                    .map(|(choice, mut post)| {
                        post.sort_unstable();
                        post.dedup();
                        Move { choice, post }
                    })
                    .collect()
            })
            .collect()
    }
}

fn too_large(used: usize) -> AtlError {
    AtlError::Resource {
        what: "state space too large".into(),
        used,
        budget: MAX_STATES,
    }
}
