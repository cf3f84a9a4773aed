//! Directed arenas with fixed vertex and edge enumerations.
//!
//! A [`Graph`] keeps vertices and edges in declaration order; that order is
//! the enumeration used everywhere else (edge propositions, edge indices in
//! serialized states, tie-breaking in strategy synthesis).

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on the size of an edge universe; edge sets are 64-bit masks.
pub const MAX_EDGES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

/// A subset of an edge enumeration, as a bit mask indexed by [`EdgeId`].
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeSet(u64);

impl EdgeSet {
    pub const EMPTY: EdgeSet = EdgeSet(0);

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_EDGES);
        if n == MAX_EDGES {
            EdgeSet(u64::MAX)
        } else {
            EdgeSet((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        EdgeSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, e: EdgeId) -> bool {
        e.0 < MAX_EDGES && self.0 & (1u64 << e.0) != 0
    }

    pub fn with(self, e: EdgeId) -> Self {
        EdgeSet(self.0 | (1u64 << e.0))
    }

    pub fn without(self, e: EdgeId) -> Self {
        EdgeSet(self.0 & !(1u64 << e.0))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: EdgeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: EdgeSet) -> Self {
        EdgeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: EdgeSet) -> Self {
        EdgeSet(self.0 & other.0)
    }

    pub fn difference(self, other: EdgeSet) -> Self {
        EdgeSet(self.0 & !other.0)
    }

    /// Members in increasing enumeration order.
    pub fn iter(self) -> impl Iterator<Item = EdgeId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(EdgeId(i))
            }
        })
    }
}

impl FromIterator<EdgeId> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = EdgeId>>(iter: I) -> Self {
        iter.into_iter().fold(EdgeSet::EMPTY, EdgeSet::with)
    }
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|e| e.0)).finish()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("malformed graph document: {0}")]
    Malformed(String),
    #[error("empty vertex set")]
    EmptyVertices,
    #[error("empty edge set")]
    EmptyEdges,
    #[error("duplicate vertex \"{0}\"")]
    DuplicateVertex(String),
    #[error("duplicate edge (\"{0}\", \"{1}\")")]
    DuplicateEdge(String, String),
    #[error("edge (\"{0}\", \"{1}\") references unknown vertex \"{2}\"")]
    UnknownEndpoint(String, String, String),
    #[error("missing start vertex")]
    MissingStart,
    #[error("unknown vertex \"{0}\"")]
    UnknownVertex(String),
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(usize),
    #[error("too many edges: {0} (at most {MAX_EDGES} supported)")]
    TooManyEdges(usize),
}

/// Wire form of a graph. Field order is the serialized key order.
#[derive(Debug, Serialize, Deserialize)]
struct GraphDoc {
    vertices: Vec<String>,
    edges: Vec<(String, String)>,
    #[serde(default)]
    start: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal: Option<String>,
}

/// A simple directed graph with a start vertex and an optional goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<(VertexId, VertexId)>,
    start: VertexId,
    goal: Option<VertexId>,
    vertex_index: HashMap<String, VertexId>,
    edge_index: HashMap<(VertexId, VertexId), EdgeId>,
}

impl Graph {
    /// Builds a graph from names. Edges refer to vertices by name.
    pub fn new<V, E>(vertices: V, edges: E, start: &str, goal: Option<&str>) -> Result<Self, GraphError>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        Self::build(
            vertices,
            edges.into_iter().collect(),
            Some(start.to_string()),
            goal.map(str::to_string),
        )
    }

    /// Convenience constructor for tests and fixtures.
    pub fn from_pairs(
        vertices: &[&str],
        edges: &[(&str, &str)],
        start: &str,
        goal: Option<&str>,
    ) -> Result<Self, GraphError> {
        Self::new(
            vertices.iter().copied(),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())),
            start,
            goal,
        )
    }

    fn build(
        vertices: Vec<String>,
        edge_names: Vec<(String, String)>,
        start: Option<String>,
        goal: Option<String>,
    ) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::EmptyVertices);
        }
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), VertexId(i)).is_some() {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        if edge_names.is_empty() {
            return Err(GraphError::EmptyEdges);
        }
        if edge_names.len() > MAX_EDGES {
            return Err(GraphError::TooManyEdges(edge_names.len()));
        }
        let mut edges = Vec::with_capacity(edge_names.len());
        let mut edge_index = HashMap::with_capacity(edge_names.len());
        for (a, b) in &edge_names {
            let lookup = |name: &String| {
                vertex_index
                    .get(name)
                    .copied()
                    .ok_or_else(|| GraphError::UnknownEndpoint(a.clone(), b.clone(), name.clone()))
            };
            let pair = (lookup(a)?, lookup(b)?);
            if edge_index.insert(pair, EdgeId(edges.len())).is_some() {
                return Err(GraphError::DuplicateEdge(a.clone(), b.clone()));
            }
            edges.push(pair);
        }
        let start = start.ok_or(GraphError::MissingStart)?;
        let start = *vertex_index.get(&start).ok_or(GraphError::UnknownVertex(start))?;
        let goal = match goal {
            Some(g) => Some(*vertex_index.get(&g).ok_or(GraphError::UnknownVertex(g))?),
            None => None,
        };
        Ok(Graph {
            vertices,
            edges,
            start,
            goal,
            vertex_index,
            edge_index,
        })
    }

    /// Parses the graph JSON document.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
        Self::build(doc.vertices, doc.edges, doc.start, doc.goal)
    }

    /// Serializes to the graph JSON document (compact, keys in canonical order).
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.doc()).expect("graph documents always serialize")
    }

    fn doc(&self) -> GraphDoc {
        GraphDoc {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (self.name(a).to_string(), self.name(b).to_string()))
                .collect(),
            start: Some(self.name(self.start).to_string()),
            goal: self.goal.map(|g| self.name(g).to_string()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn start(&self) -> VertexId {
        self.start
    }

    pub fn goal(&self) -> Option<VertexId> {
        self.goal
    }

    /// Same graph with a different start and goal.
    pub fn with_endpoints(&self, start: VertexId, goal: Option<VertexId>) -> Self {
        Graph {
            start,
            goal,
            ..self.clone()
        }
    }

    pub fn all_edges(&self) -> EdgeSet {
        EdgeSet::full(self.edges.len())
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.vertices[v.0]
    }

    pub fn vertex(&self, name: &str) -> Result<VertexId, GraphError> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    pub fn edge(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e.0]
    }

    pub fn edge_id(&self, from: VertexId, to: VertexId) -> Option<EdgeId> {
        self.edge_index.get(&(from, to)).copied()
    }

    /// Edge by vertex names, e.g. `("s", "u")`.
    pub fn edge_by_names(&self, from: &str, to: &str) -> Result<Option<EdgeId>, GraphError> {
        Ok(self.edge_id(self.vertex(from)?, self.vertex(to)?))
    }

    /// The set of named edges. Unknown pairs are reported as unknown vertices.
    pub fn edge_set(&self, pairs: &[(&str, &str)]) -> Result<EdgeSet, GraphError> {
        pairs
            .iter()
            .map(|(a, b)| {
                self.edge_by_names(a, b)?
                    .ok_or_else(|| GraphError::UnknownVertex(format!("({a},{b})")))
            })
            .collect()
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if v.0 < self.vertices.len() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange(v.0))
        }
    }

    /// Members of `edges` sourced at `v`.
    pub fn out_edges(&self, edges: EdgeSet, v: VertexId) -> Result<EdgeSet, GraphError> {
        self.check_vertex(v)?;
        Ok(edges
            .iter()
            .filter(|e| e.0 < self.edges.len() && self.edges[e.0].0 == v)
            .collect())
    }

    /// Whether `to` is reachable from `from` using only `edges` (paths of length 0 count).
    pub fn has_path(&self, edges: EdgeSet, from: VertexId, to: VertexId) -> Result<bool, GraphError> {
        self.check_vertex(from)?;
        self.check_vertex(to)?;
        Ok(reachable(&self.edges, edges, from, self.vertices.len())[to.0])
    }

    pub fn edge_label(&self, e: EdgeId) -> String {
        let (a, b) = self.edge(e);
        format!("({},{})", self.name(a), self.name(b))
    }

    /// Human-readable edge set, e.g. `{(0,1),(1,2)}`.
    pub fn format_edges(&self, edges: EdgeSet) -> String {
        let items: Vec<String> = edges.iter().map(|e| self.edge_label(e)).collect();
        format!("{{{}}}", items.join(","))
    }
}

/// Breadth-first reachability over the edges of `universe` selected by `mask`.
pub(crate) fn reachable(
    universe: &[(VertexId, VertexId)],
    mask: EdgeSet,
    from: VertexId,
    vertex_count: usize,
) -> Vec<bool> {
    let mut seen = vec![false; vertex_count];
    let mut queue = VecDeque::from([from]);
    seen[from.0] = true;
    while let Some(v) = queue.pop_front() {
        for e in mask.iter() {
            let (a, b) = universe[e.0];
            if a == v && !seen[b.0] {
                seen[b.0] = true;
                queue.push_back(b);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{"vertices":["0","1","2"],"edges":[["0","1"],["0","2"],["1","2"]],"start":"0"}"#;
    const ESCAPE: &str = r#"{"vertices":["s","u","v","w","t"],"edges":[["s","u"],["s","w"],["u","v"],["v","u"],["v","w"],["w","v"],["u","t"],["v","t"],["w","t"]],"start":"s","goal":"t"}"#;

    #[test]
    fn parses_the_three_vertex_example() {
        let g = Graph::parse(TRIANGLE).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.goal(), None);
        assert_eq!(g.to_json(), TRIANGLE);
    }

    #[test]
    fn parses_the_cut_example() {
        let g = Graph::parse(ESCAPE).unwrap();
        assert_eq!(g.edge_count(), 9);
        assert_eq!(g.goal(), Some(g.vertex("t").unwrap()));
        assert_eq!(g.to_json(), ESCAPE);
    }

    #[test]
    fn rejects_malformed_documents() {
        let cases = [
            (r#"{"vertices":["a"],"edges":[],"start":"a"}"#, GraphError::EmptyEdges),
            (
                r#"{"vertices":[],"edges":[["a","a"]],"start":"a"}"#,
                GraphError::EmptyVertices,
            ),
            (
                r#"{"vertices":["a","a"],"edges":[["a","a"]],"start":"a"}"#,
                GraphError::DuplicateVertex("a".into()),
            ),
            (
                r#"{"vertices":["a","b"],"edges":[["a","b"],["a","b"]],"start":"a"}"#,
                GraphError::DuplicateEdge("a".into(), "b".into()),
            ),
            (
                r#"{"vertices":["a","b"],"edges":[["a","c"]],"start":"a"}"#,
                GraphError::UnknownEndpoint("a".into(), "c".into(), "c".into()),
            ),
            (
                r#"{"vertices":["a","b"],"edges":[["a","b"]]}"#,
                GraphError::MissingStart,
            ),
            (
                r#"{"vertices":["a","b"],"edges":[["a","b"]],"start":"a","goal":"z"}"#,
                GraphError::UnknownVertex("z".into()),
            ),
        ];
        for (text, expected) in cases {
            assert_eq!(Graph::parse(text).unwrap_err(), expected, "{text}");
        }
        assert!(matches!(Graph::parse("[1,2]"), Err(GraphError::Malformed(_))));
    }

    #[test]
    fn error_messages_name_the_offender() {
        let err = Graph::parse(r#"{"vertices":["a"],"edges":[],"start":"a"}"#).unwrap_err();
        assert_eq!(err.to_string(), "empty edge set");
        let err = Graph::parse(r#"{"vertices":["a","b"],"edges":[["a","q"]],"start":"a"}"#).unwrap_err();
        assert!(err.to_string().contains("\"q\""));
    }

    #[test]
    fn self_loops_and_goal_named_g_are_legal() {
        let g = Graph::from_pairs(&["g", "x"], &[("g", "g"), ("g", "x")], "g", Some("g")).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.name(g.start()), "g");
    }

    #[test]
    fn out_edges_filters_by_source() {
        let g = Graph::parse(TRIANGLE).unwrap();
        let all = g.all_edges();
        let v0 = g.vertex("0").unwrap();
        assert_eq!(
            g.out_edges(all, v0).unwrap(),
            g.edge_set(&[("0", "1"), ("0", "2")]).unwrap()
        );
        let only12 = g.edge_set(&[("1", "2")]).unwrap();
        assert!(g.out_edges(only12, g.vertex("2").unwrap()).unwrap().is_empty());
        assert!(g.out_edges(all, VertexId(7)).is_err());

        let g = Graph::parse(ESCAPE).unwrap();
        assert_eq!(
            g.out_edges(g.all_edges(), g.vertex("v").unwrap()).unwrap(),
            g.edge_set(&[("v", "u"), ("v", "w"), ("v", "t")]).unwrap()
        );
    }

    #[test]
    fn has_path_respects_direction_and_removals() {
        let g = Graph::parse(TRIANGLE).unwrap();
        let only12 = g.edge_set(&[("1", "2")]).unwrap();
        let (v1, v2) = (g.vertex("1").unwrap(), g.vertex("2").unwrap());
        assert!(!g.has_path(only12, v2, v1).unwrap());
        assert!(g.has_path(only12, v1, v2).unwrap());

        let g = Graph::parse(ESCAPE).unwrap();
        let (s, u, t) = (g.vertex("s").unwrap(), g.vertex("u").unwrap(), g.vertex("t").unwrap());
        assert!(g.has_path(g.all_edges(), s, t).unwrap());
        let cut = g.edge_set(&[("s", "u"), ("u", "v"), ("u", "t")]).unwrap();
        let rest = g.all_edges().difference(cut);
        assert!(!g.has_path(rest, u, t).unwrap());
        assert!(g.has_path(rest, s, t).unwrap());
        assert!(g.has_path(EdgeSet::EMPTY, u, u).unwrap());
    }

    #[test]
    fn edge_set_iteration_is_ordered() {
        let set: EdgeSet = [EdgeId(5), EdgeId(0), EdgeId(3)].into_iter().collect();
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![EdgeId(0), EdgeId(3), EdgeId(5)]);
        assert_eq!(set.len(), 3);
        assert!(set.without(EdgeId(3)).is_subset(set));
        assert_eq!(EdgeSet::full(64).len(), 64);
    }
}
