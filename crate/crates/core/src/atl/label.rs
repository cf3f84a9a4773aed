//! Structural labeling of game-states.

use std::fmt;

use crate::game::{Arena, State};
use crate::graph::{EdgeId, VertexId};

use super::formula::Prop;
use super::{AtlError, GameModel};

/// `{p_i} ∪ {q_j | e_j present} ∪ {g if at the goal}`. Owner tags are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSet {
    pub position: VertexId,
    pub edges: Vec<EdgeId>,
    pub goal: bool,
}

impl LabelSet {
    /// Proposition names: `p_i`, `q_j` and `g`, in enumeration order.
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = self.edges.iter().map(|e| format!("q_{}", e.0)).collect();
        out.push(format!("p_{}", self.position.0));
        if self.goal {
            out.push("g".into());
        }
        out
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

pub fn label(_arena: &Arena, s: &State, goal: Option<VertexId>) -> LabelSet {
    LabelSet {
        position: s.position,
        edges: s.edges.iter().collect(),
        goal: goal == Some(s.position),
    }
}

/// A proposition resolved against an arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Atom {
    Goal(Option<VertexId>),
    At(VertexId),
    Edge(EdgeId),
}

impl Atom {
    pub(crate) fn resolve(model: &GameModel, p: &Prop) -> Result<Atom, AtlError> {
        let g = model.arena.graph();
        match p {
            Prop::Goal => Ok(Atom::Goal(model.goal)),
            Prop::At(v) => g
                .vertex(v)
                .map(Atom::At)
                .map_err(|_| AtlError::UnknownVertex(v.clone())),
            Prop::Edge(v, w) => {
                let x = g.vertex(v).map_err(|_| AtlError::UnknownVertex(v.clone()))?;
                let y = g.vertex(w).map_err(|_| AtlError::UnknownVertex(w.clone()))?;
                model
                    .arena
                    .universe_edge(x, y)
                    .map(Atom::Edge)
                    .ok_or_else(|| AtlError::UnknownEdge(v.clone(), w.clone()))
            }
        }
    }

    pub(crate) fn holds(self, s: &State) -> bool {
        match self {
            Atom::Goal(g) => g == Some(s.position),
            Atom::At(v) => s.position == v,
            Atom::Edge(e) => s.edges.contains(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::StructureKind;
    use crate::graph::Graph;

    fn arena() -> Arena {
        let g = Graph::from_pairs(&["0", "1", "2"], &[("0", "1"), ("0", "2"), ("1", "2")], "0", None).unwrap();
        Arena::new(StructureKind::Tb, g).unwrap()
    }

    #[test]
    fn labels_follow_the_enumerations() {
        let a = arena();
        let s = a.parse_state("(({(0,1),(1,2)},1),r)").unwrap();
        let l = label(&a, &s, Some(VertexId(2)));
        assert_eq!(l.names(), vec!["q_0", "q_2", "p_1"]);
        let s = a.parse_state("((E,2),r)").unwrap();
        assert!(label(&a, &s, Some(VertexId(2))).goal);
        let s = a.parse_state("(({},0),r)").unwrap();
        assert_eq!(label(&a, &s, None).to_string(), "{p_0}");
    }

    #[test]
    fn owner_does_not_change_labels() {
        let a = arena();
        let r = a.parse_state("((E,1),r)").unwrap();
        let d = a.parse_state("((E,1),d)").unwrap();
        assert_eq!(label(&a, &r, None), label(&a, &d, None));
    }

    #[test]
    fn atoms_resolve_by_name() {
        let m = GameModel::new(arena(), Some(VertexId(2)));
        let s = m.arena.parse_state("(({(1,2)},1),r)").unwrap();
        assert!(Atom::resolve(&m, &Prop::At("1".into())).unwrap().holds(&s));
        assert!(Atom::resolve(&m, &Prop::Edge("1".into(), "2".into()))
            .unwrap()
            .holds(&s));
        assert!(!Atom::resolve(&m, &Prop::Edge("0".into(), "1".into()))
            .unwrap()
            .holds(&s));
        assert!(Atom::resolve(&m, &Prop::Edge("2".into(), "0".into())).is_err());
        assert!(Atom::resolve(&m, &Prop::At("z".into())).is_err());
    }
}
