//! Directed acyclic graphs over labelled nodes.
//!
//! A [`Dag`] is validated once at construction and immutable afterwards.
//! Nodes keep their declared insertion order; a topological order is computed
//! eagerly, breaking ties by insertion order so that results are reproducible.
//! Set-valued queries return `BTreeSet`s, i.e. sorted by label.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the number of paths [`Dag::undirected_paths`] will enumerate.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node labels must be non-empty")]
    EmptyLabel,
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("path endpoints must differ (got `{0}` twice)")]
    SameEndpoints(String),
    #[error("path enumeration aborted after {0} paths")]
    PathCapExceeded(usize),
    #[error("malformed path: {0}")]
    MalformedPath(String),
}

/// Label of a graph node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(label: impl Into<String>) -> Self {
        NodeId(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Orientation of one step of a [`Path`] relative to the underlying edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `nodes[i] -> nodes[i + 1]`
    Forward,
    /// `nodes[i] <- nodes[i + 1]`
    Backward,
}

/// A simple path, traversed regardless of edge orientation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    nodes: Vec<NodeId>,
    steps: Vec<Direction>,
}

impl Path {
    /// Builds a path and checks it against `g`.
    pub fn new(g: &Dag, nodes: Vec<NodeId>, steps: Vec<Direction>) -> Result<Self, GraphError> {
        let p = Path { nodes, steps };
        p.validate(g)?;
        Ok(p)
    }

    /// Builds a path from a node sequence, inferring each step's direction from `g`.
    pub fn through(g: &Dag, nodes: &[&str]) -> Result<Self, GraphError> {
        let mut steps = Vec::with_capacity(nodes.len().saturating_sub(1));
        for w in nodes.windows(2) {
            let a = g.require(w[0])?;
            let b = g.require(w[1])?;
            if g.has_edge_idx(a, b) {
                steps.push(Direction::Forward);
            } else if g.has_edge_idx(b, a) {
                steps.push(Direction::Backward);
            } else {
                return Err(GraphError::MalformedPath(format!(
                    "no edge between `{}` and `{}`",
                    w[0], w[1]
                )));
            }
        }
        Path::new(g, nodes.iter().map(|s| NodeId::from(*s)).collect(), steps)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn steps(&self) -> &[Direction] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_directed(&self) -> bool {
        self.steps.iter().all(|d| *d == Direction::Forward)
    }

    /// Whether the interior node at `pos` has both adjacent edges pointing into it.
    pub fn is_collider_at(&self, pos: usize) -> bool {
        pos > 0
            && pos + 1 < self.nodes.len()
            && self.steps[pos - 1] == Direction::Forward
            && self.steps[pos] == Direction::Backward
    }

    pub fn validate(&self, g: &Dag) -> Result<(), GraphError> {
        if self.nodes.len() < 2 {
            return Err(GraphError::MalformedPath("fewer than two nodes".into()));
        }
        if self.steps.len() + 1 != self.nodes.len() {
            return Err(GraphError::MalformedPath(format!(
                "{} nodes but {} steps",
                self.nodes.len(),
                self.steps.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            g.require(n.as_str())?;
            if !seen.insert(n) {
                return Err(GraphError::MalformedPath(format!("node `{n}` repeated")));
            }
        }
        for (i, d) in self.steps.iter().enumerate() {
            let a = g.index[&self.nodes[i]];
            let b = g.index[&self.nodes[i + 1]];
            let ok = match d {
                Direction::Forward => g.has_edge_idx(a, b),
                Direction::Backward => g.has_edge_idx(b, a),
            };
            if !ok {
                return Err(GraphError::MalformedPath(format!(
                    "step {i} between `{}` and `{}` is not an edge in the stated direction",
                    self.nodes[i],
                    self.nodes[i + 1]
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(match self.steps[i - 1] {
                    Direction::Forward => "→",
                    Direction::Backward => "←",
                })?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// Parents, children, ancestors and descendants of one node.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Relatives {
    pub parents: BTreeSet<NodeId>,
    pub children: BTreeSet<NodeId>,
    pub ancestors: BTreeSet<NodeId>,
    pub descendants: BTreeSet<NodeId>,
}

/// Validated directed acyclic graph.
#[derive(Debug, Clone)]
pub struct Dag {
    labels: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
    topo_pos: Vec<usize>,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        if self.labels != other.labels {
            return false;
        }
        let mut a = self.edges.clone();
        let mut b = other.edges.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

impl Dag {
    /// Validates nodes and edges and computes a topological order.
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator,
        N::Item: Into<NodeId>,
        E: IntoIterator,
        E::Item: EdgeLike,
    {
        let labels: Vec<NodeId> = nodes.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if l.0.is_empty() {
                return Err(GraphError::EmptyLabel);
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(GraphError::DuplicateNode(l.0.clone()));
            }
        }
        let n = labels.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut out = Vec::new();
        for e in edges {
            let (from, to) = e.endpoints();
            let a = *index
                .get(from)
                .ok_or_else(|| GraphError::UnknownNode(from.to_owned()))?;
            let b = *index
                .get(to)
                .ok_or_else(|| GraphError::UnknownNode(to.to_owned()))?;
            if a == b {
                return Err(GraphError::SelfLoop(from.to_owned()));
            }
            if children[a].contains(&b) {
                return Err(GraphError::DuplicateEdge(from.to_owned(), to.to_owned()));
            }
            children[a].push(b);
            parents[b].push(a);
            out.push((a, b));
        }
        let topo = kahn(&parents, &children).map_err(|remaining| {
            GraphError::Cycle(
                find_cycle(&parents, &remaining)
                    .into_iter()
                    .map(|i| labels[i].0.clone())
                    .collect(),
            )
        })?;
        let mut topo_pos = vec![0; n];
        for (p, &v) in topo.iter().enumerate() {
            topo_pos[v] = p;
        }
        Ok(Dag {
            labels,
            index,
            edges: out,
            parents,
            children,
            topo,
            topo_pos,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Nodes in declared order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.labels
    }

    /// Edges in declared order.
    pub fn edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (&self.labels[a], &self.labels[b]))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, v: &str) -> bool {
        self.index.contains_key(v)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => self.has_edge_idx(a, b),
            _ => false,
        }
    }

    pub fn topological_order(&self) -> Vec<NodeId> {
        self.topo.iter().map(|&i| self.labels[i].clone()).collect()
    }

    pub fn relatives(&self, v: &str) -> Result<Relatives, GraphError> {
        let i = self.require(v)?;
        let names = |idx: &[usize]| idx.iter().map(|&j| self.labels[j].clone()).collect();
        Ok(Relatives {
            parents: names(&self.parents[i]),
            children: names(&self.children[i]),
            ancestors: self.mask_to_set(&self.ancestors_mask(&[i]), Some(i)),
            descendants: self.mask_to_set(&self.descendants_mask(&[i]), Some(i)),
        })
    }

    pub fn parents(&self, v: &str) -> Result<BTreeSet<NodeId>, GraphError> {
        Ok(self.relatives(v)?.parents)
    }

    pub fn descendants(&self, v: &str) -> Result<BTreeSet<NodeId>, GraphError> {
        Ok(self.relatives(v)?.descendants)
    }

    /// All simple paths between `a` and `b` ignoring orientation, sorted
    /// lexicographically by their label sequences.
    pub fn undirected_paths(&self, a: &str, b: &str) -> Result<Vec<Path>, GraphError> {
        self.undirected_paths_capped(a, b, DEFAULT_PATH_CAP)
    }

    pub fn undirected_paths_capped(
        &self,
        a: &str,
        b: &str,
        cap: usize,
    ) -> Result<Vec<Path>, GraphError> {
        let s = self.require(a)?;
        let t = self.require(b)?;
        if s == t {
            return Err(GraphError::SameEndpoints(a.to_owned()));
        }
        let mut out = Vec::new();
        self.enumerate_paths(s, t, false, &[], cap, &mut out)?;
        Ok(out)
    }

    /// All simple directed paths from `a` to `b` whose interior avoids `avoid`.
    pub fn directed_paths(
        &self,
        a: &str,
        b: &str,
        avoid: &BTreeSet<NodeId>,
    ) -> Result<Vec<Path>, GraphError> {
        let s = self.require(a)?;
        let t = self.require(b)?;
        if s == t {
            return Err(GraphError::SameEndpoints(a.to_owned()));
        }
        let avoid: Vec<usize> = avoid
            .iter()
            .map(|v| self.require(v.as_str()))
            .collect::<Result<_, _>>()?;
        let mut out = Vec::new();
        self.enumerate_paths(s, t, true, &avoid, DEFAULT_PATH_CAP, &mut out)?;
        Ok(out)
    }

    /// Copy of the graph with every edge into any of `targets` removed.
    pub fn without_incoming(&self, targets: &BTreeSet<usize>) -> Dag {
        self.filtered(|_, b| !targets.contains(&b))
    }

    /// Copy of the graph with every edge out of any of `sources` removed.
    pub fn without_outgoing(&self, sources: &BTreeSet<usize>) -> Dag {
        self.filtered(|a, _| !sources.contains(&a))
    }

    fn filtered(&self, keep: impl Fn(usize, usize) -> bool) -> Dag {
        let edges: Vec<(&str, &str)> = self
            .edges
            .iter()
            .filter(|&&(a, b)| keep(a, b))
            .map(|&(a, b)| (self.labels[a].as_str(), self.labels[b].as_str()))
            .collect();
        Dag::new(self.labels.iter().cloned(), edges).expect("edge subset of a DAG is a DAG")
    }

    // Index-level accessors used by the inference modules.

    pub fn index_of(&self, v: &str) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn require(&self, v: &str) -> Result<usize, GraphError> {
        self.index_of(v)
            .ok_or_else(|| GraphError::UnknownNode(v.to_owned()))
    }

    pub fn label(&self, i: usize) -> &NodeId {
        &self.labels[i]
    }

    pub fn parents_idx(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children_idx(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn topo_idx(&self) -> &[usize] {
        &self.topo
    }

    pub fn topo_position(&self, i: usize) -> usize {
        self.topo_pos[i]
    }

    pub fn has_edge_idx(&self, a: usize, b: usize) -> bool {
        self.children[a].contains(&b)
    }

    /// Reflexive-transitive closure of children from `start`.
    pub fn descendants_mask(&self, start: &[usize]) -> Vec<bool> {
        self.closure(start, &self.children)
    }

    /// Reflexive-transitive closure of parents from `start`.
    pub fn ancestors_mask(&self, start: &[usize]) -> Vec<bool> {
        self.closure(start, &self.parents)
    }

    fn closure(&self, start: &[usize], adj: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = start.iter().copied().collect();
        for &s in start {
            seen[s] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    fn mask_to_set(&self, mask: &[bool], exclude: Option<usize>) -> BTreeSet<NodeId> {
        mask.iter()
            .enumerate()
            .filter(|&(i, &m)| m && Some(i) != exclude)
            .map(|(i, _)| self.labels[i].clone())
            .collect()
    }

    pub(crate) fn sorted_labels(&self, idx: impl IntoIterator<Item = usize>) -> BTreeSet<NodeId> {
        idx.into_iter().map(|i| self.labels[i].clone()).collect()
    }

    fn enumerate_paths(
        &self,
        s: usize,
        t: usize,
        directed_only: bool,
        avoid: &[usize],
        cap: usize,
        out: &mut Vec<Path>,
    ) -> Result<(), GraphError> {
        // Neighbours sorted by label so depth-first order is lexicographic.
        let mut nbrs: Vec<Vec<(usize, Direction)>> = (0..self.len())
            .map(|v| {
                let mut n: Vec<(usize, Direction)> = self.children[v]
                    .iter()
                    .map(|&c| (c, Direction::Forward))
                    .collect();
                if !directed_only {
                    n.extend(self.parents[v].iter().map(|&p| (p, Direction::Backward)));
                }
                n
            })
            .collect();
        for n in &mut nbrs {
            n.sort_by(|x, y| self.labels[x.0].cmp(&self.labels[y.0]));
        }
        let mut on_path = vec![false; self.len()];
        for &a in avoid {
            on_path[a] = true;
        }
        on_path[s] = true;
        on_path[t] = false;
        let mut nodes = vec![s];
        let mut steps = Vec::new();
        // Explicit stack of neighbour cursors.
        let mut cursor = vec![0usize];
        while let Some(&v) = nodes.last() {
            let k = cursor.last_mut().unwrap();
            if *k >= nbrs[v].len() {
                cursor.pop();
                nodes.pop();
                steps.pop();
                on_path[v] = false;
                continue;
            }
            let (w, d) = nbrs[v][*k];
            *k += 1;
            if w == t {
                if out.len() >= cap {
                    return Err(GraphError::PathCapExceeded(cap));
                }
                let mut ns: Vec<NodeId> = nodes.iter().map(|&i| self.labels[i].clone()).collect();
                ns.push(self.labels[t].clone());
                let mut ss = steps.clone();
                ss.push(d);
                out.push(Path {
                    nodes: ns,
                    steps: ss,
                });
            } else if !on_path[w] {
                on_path[w] = true;
                nodes.push(w);
                steps.push(d);
                cursor.push(0);
            }
        }
        for &a in avoid {
            on_path[a] = false;
        }
        Ok(())
    }
}

/// Anything that names an edge by its endpoint labels.
pub trait EdgeLike {
    fn endpoints(&self) -> (&str, &str);
}

impl<A: AsRef<str>, B: AsRef<str>> EdgeLike for (A, B) {
    fn endpoints(&self) -> (&str, &str) {
        (self.0.as_ref(), self.1.as_ref())
    }
}

impl<A: AsRef<str>, B: AsRef<str>> EdgeLike for &(A, B) {
    fn endpoints(&self) -> (&str, &str) {
        (self.0.as_ref(), self.1.as_ref())
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Kahn's algorithm with ties broken by insertion index. On failure returns
/// the nodes left with unresolved in-degree.
fn kahn(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indeg[i] > 0).collect())
    }
}

/// Walks parent links inside the unresolved remainder until a node repeats.
fn find_cycle(parents: &[Vec<usize>], remaining: &[usize]) -> Vec<usize> {
    let inside: BTreeSet<usize> = remaining.iter().copied().collect();
    let mut walk = vec![remaining[0]];
    let mut pos = HashMap::new();
    pos.insert(remaining[0], 0usize);
    loop {
        let v = *walk.last().unwrap();
        let p = *parents[v]
            .iter()
            .find(|p| inside.contains(p))
            .expect("every unresolved node has an unresolved parent");
        if let Some(&start) = pos.get(&p) {
            let mut cycle: Vec<usize> = walk[start..].to_vec();
            // Walk followed parent links; reverse into edge direction.
            cycle.reverse();
            cycle.push(cycle[0]);
            return cycle;
        }
        pos.insert(p, walk.len());
        walk.push(p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Dag {
        Dag::new(
            ["X1", "X2", "X3"],
            [("X1", "X2"), ("X1", "X3"), ("X2", "X3")],
        )
        .unwrap()
    }

    fn set(xs: &[&str]) -> BTreeSet<NodeId> {
        xs.iter().map(|s| NodeId::from(*s)).collect()
    }

    #[test]
    fn builds_triangle_with_topological_order() {
        let g = triangle();
        let order: Vec<String> = g
            .topological_order()
            .iter()
            .map(|n| n.to_string())
            .collect();
        assert_eq!(order, ["X1", "X2", "X3"]);
    }

    #[test]
    fn two_cycle_is_reported() {
        let err = Dag::new(["A", "B"], [("A", "B"), ("B", "A")]).unwrap_err();
        match err {
            GraphError::Cycle(c) => {
                assert!(c.contains(&"A".to_string()) && c.contains(&"B".to_string()));
                assert_eq!(c.first(), c.last());
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn longer_cycle_is_reported_in_edge_direction() {
        let err = Dag::new(
            ["A", "B", "C", "D"],
            [("D", "A"), ("A", "B"), ("B", "C"), ("C", "A")],
        )
        .unwrap_err();
        let GraphError::Cycle(c) = err else { panic!() };
        assert_eq!(c.len(), 4);
        let g_edges = [("A", "B"), ("B", "C"), ("C", "A")];
        for w in c.windows(2) {
            assert!(g_edges.contains(&(w[0].as_str(), w[1].as_str())), "{c:?}");
        }
    }

    #[test]
    fn edgeless_graph_is_valid() {
        let g = Dag::new(["A", "B", "C"], Vec::<(&str, &str)>::new()).unwrap();
        assert_eq!(g.topological_order().len(), 3);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            Dag::new(["A", "A"], Vec::<(&str, &str)>::new()).unwrap_err(),
            GraphError::DuplicateNode("A".into())
        );
        assert_eq!(
            Dag::new(["A"], [("A", "Z")]).unwrap_err(),
            GraphError::UnknownNode("Z".into())
        );
        assert_eq!(
            Dag::new(["A"], [("A", "A")]).unwrap_err(),
            GraphError::SelfLoop("A".into())
        );
        assert_eq!(
            Dag::new(["A", "B"], [("A", "B"), ("A", "B")]).unwrap_err(),
            GraphError::DuplicateEdge("A".into(), "B".into())
        );
        assert_eq!(
            Dag::new([""], Vec::<(&str, &str)>::new()).unwrap_err(),
            GraphError::EmptyLabel
        );
    }

    #[test]
    fn relatives_examples() {
        let g = triangle();
        let r = g.relatives("X3").unwrap();
        assert_eq!(r.parents, set(&["X1", "X2"]));
        assert!(r.descendants.is_empty());
        assert_eq!(r.ancestors, set(&["X1", "X2"]));

        let chain = Dag::new(["A", "B", "C"], [("A", "B"), ("B", "C")]).unwrap();
        let r = chain.relatives("A").unwrap();
        assert_eq!(r.descendants, set(&["B", "C"]));
        assert!(r.ancestors.is_empty());

        let iso = Dag::new(["A", "B"], Vec::<(&str, &str)>::new()).unwrap();
        assert_eq!(iso.relatives("A").unwrap(), Relatives::default());
        assert!(matches!(
            iso.relatives("Q"),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn undirected_paths_examples() {
        let g = triangle();
        let ps = g.undirected_paths("X1", "X3").unwrap();
        let shown: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
        assert_eq!(shown, ["X1→X2→X3", "X1→X3"]);

        let col = Dag::new(["A", "B", "C"], [("A", "C"), ("B", "C")]).unwrap();
        let ps = col.undirected_paths("A", "B").unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].to_string(), "A→C←B");
        assert!(ps[0].is_collider_at(1));

        let disc = Dag::new(["A", "B"], Vec::<(&str, &str)>::new()).unwrap();
        assert!(disc.undirected_paths("A", "B").unwrap().is_empty());
        assert!(matches!(
            disc.undirected_paths("A", "A"),
            Err(GraphError::SameEndpoints(_))
        ));
    }

    #[test]
    fn path_cap_is_enforced() {
        let g = triangle();
        assert_eq!(
            g.undirected_paths_capped("X1", "X3", 1).unwrap_err(),
            GraphError::PathCapExceeded(1)
        );
    }

    #[test]
    fn path_validation() {
        let g = triangle();
        assert!(Path::through(&g, &["X1", "X2", "X3"]).is_ok());
        let bad = Path::new(
            &g,
            vec!["X1".into(), "X2".into()],
            vec![Direction::Backward],
        );
        assert!(matches!(bad, Err(GraphError::MalformedPath(_))));
        let repeated = Path::new(
            &g,
            vec!["X1".into(), "X2".into(), "X1".into()],
            vec![Direction::Forward, Direction::Backward],
        );
        assert!(matches!(repeated, Err(GraphError::MalformedPath(_))));
    }

    #[test]
    fn directed_paths_respect_avoid_set() {
        let g = triangle();
        let all = g.directed_paths("X1", "X3", &BTreeSet::new()).unwrap();
        assert_eq!(all.len(), 2);
        let avoid = g.directed_paths("X1", "X3", &set(&["X2"])).unwrap();
        assert_eq!(avoid.len(), 1);
        assert_eq!(avoid[0].to_string(), "X1→X3");
    }

    #[test]
    fn surgery_helpers() {
        let g = triangle();
        let x2 = g.index_of("X2").unwrap();
        let cut = g.without_incoming(&BTreeSet::from([x2]));
        assert!(!cut.has_edge("X1", "X2"));
        assert!(cut.has_edge("X2", "X3") && cut.has_edge("X1", "X3"));
        let cut = g.without_outgoing(&BTreeSet::from([x2]));
        assert!(!cut.has_edge("X2", "X3"));
    }
}
