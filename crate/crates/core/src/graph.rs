//! Dynamic simple undirected graph over a fixed node set.

use std::fmt;

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = u32;

pub(crate) type FxIndexSet<T> = IndexSet<T, FxBuildHasher>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge {0} is already present")]
    DuplicateEdge(Edge),
    #[error("edge {0} is not present")]
    MissingEdge(Edge),
    #[error("inserting {edge} would give node {node} degree {degree} > bound {bound}")]
    DegreeBoundViolated {
        edge: Edge,
        node: NodeId,
        degree: usize,
        bound: usize,
    },
    #[error("node {node} out of range for a graph on {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
}

/// An unordered node pair, stored as `(min, max)`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    u: NodeId,
    v: NodeId,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId) -> Result<Self, GraphError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { u: a, v: b }),
            std::cmp::Ordering::Greater => Ok(Edge { u: b, v: a }),
            std::cmp::Ordering::Equal => Err(GraphError::SelfLoop(a)),
        }
    }

    /// Panics on a self-loop. Meant for fixtures and generators.
    pub fn of(a: NodeId, b: NodeId) -> Self {
        Self::new(a, b).expect("edge endpoints must differ")
    }

    #[inline]
    pub fn u(&self) -> NodeId {
        self.u
    }

    #[inline]
    pub fn v(&self) -> NodeId {
        self.v
    }

    #[inline]
    pub fn endpoints(&self) -> [NodeId; 2] {
        [self.u, self.v]
    }

    #[inline]
    pub fn touches(&self, x: NodeId) -> bool {
        self.u == x || self.v == x
    }

    /// The endpoint that is not `x`. `x` must be an endpoint.
    #[inline]
    pub fn other(&self, x: NodeId) -> NodeId {
        debug_assert!(self.touches(x));
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// Simple graph on nodes `0..n` with an optional maximum-degree promise.
///
/// Adjacency lists are insertion-ordered sets, so iteration order is a pure
/// function of the update history. Only nodes with at least one edge hold an
/// adjacency entry, which keeps many sparse subgraphs on a shared node set
/// cheap.
#[derive(Clone, Debug)]
pub struct DynGraph {
    n: usize,
    degree_bound: usize,
    adjacency: FxHashMap<NodeId, FxIndexSet<NodeId>>,
    edges: FxIndexSet<Edge>,
    // degree_histogram[d] = number of nodes with degree d
    degree_histogram: Vec<usize>,
    max_degree: usize,
}

impl DynGraph {
    pub fn new(n: usize, degree_bound: usize) -> Self {
        let mut degree_histogram = vec![0; 1];
        degree_histogram[0] = n;
        DynGraph {
            n,
            degree_bound,
            adjacency: FxHashMap::default(),
            edges: FxIndexSet::default(),
            degree_histogram,
            max_degree: 0,
        }
    }

    /// A graph with no degree promise.
    pub fn unbounded(n: usize) -> Self {
        Self::new(n, usize::MAX)
    }

    pub fn from_edges<I>(n: usize, degree_bound: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = Edge>,
    {
        let mut g = Self::new(n, degree_bound);
        for e in edges {
            g.insert_edge(e)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    fn check_node(&self, x: NodeId) -> Result<(), GraphError> {
        if (x as usize) < self.n {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange { node: x, n: self.n })
        }
    }

    pub fn check_edge(&self, e: Edge) -> Result<(), GraphError> {
        self.check_node(e.u)?;
        self.check_node(e.v)
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn insert_edge(&mut self, e: Edge) -> Result<(), GraphError> {
        self.check_edge(e)?;
        if self.contains(e) {
            return Err(GraphError::DuplicateEdge(e));
        }
        for x in e.endpoints() {
            let degree = self.degree(x) + 1;
            if degree > self.degree_bound {
                return Err(GraphError::DegreeBoundViolated {
                    edge: e,
                    node: x,
                    degree,
                    bound: self.degree_bound,
                });
            }
        }
        self.edges.insert(e);
        self.adjacency.entry(e.u).or_default().insert(e.v);
        self.adjacency.entry(e.v).or_default().insert(e.u);
        for x in e.endpoints() {
            let d = self.degree(x);
            self.shift_degree(d - 1, d);
        }
        Ok(())
    }

    pub fn delete_edge(&mut self, e: Edge) -> Result<(), GraphError> {
        self.check_edge(e)?;
        if !self.edges.swap_remove(&e) {
            return Err(GraphError::MissingEdge(e));
        }
        for (x, y) in [(e.u, e.v), (e.v, e.u)] {
            let adj = self.adjacency.get_mut(&x).expect("endpoint of a live edge");
            adj.swap_remove(&y);
            let d = adj.len();
            if d == 0 {
                self.adjacency.remove(&x);
            }
            self.shift_degree(d + 1, d);
        }
        Ok(())
    }

    fn shift_degree(&mut self, from: usize, to: usize) {
        if self.degree_histogram.len() <= to {
            self.degree_histogram.resize(to + 1, 0);
        }
        self.degree_histogram[from] -= 1;
        self.degree_histogram[to] += 1;
        if to > self.max_degree {
            self.max_degree = to;
        }
        while self.max_degree > 0 && self.degree_histogram[self.max_degree] == 0 {
            self.max_degree -= 1;
        }
    }

    /// Degree of `x`; 0 for out-of-range nodes.
    pub fn degree(&self, x: NodeId) -> usize {
        self.adjacency.get(&x).map_or(0, |a| a.len())
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn neighbors(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency
            .get(&x)
            .into_iter()
            .flat_map(|a| a.iter().copied())
    }

    /// Edges incident on `x`.
    pub fn incident(&self, x: NodeId) -> impl Iterator<Item = Edge> + '_ {
        self.neighbors(x).map(move |y| Edge::of(x, y))
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    /// Edges in ascending `(u, v)` order.
    pub fn sorted_edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self.edges().collect();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_single_edge_sets_degrees() {
        let mut g = DynGraph::new(4, 3);
        g.insert_edge(Edge::of(0, 1)).unwrap();
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn reversed_pair_is_duplicate() {
        let mut g = DynGraph::new(4, 3);
        g.insert_edge(Edge::of(0, 1)).unwrap();
        assert_eq!(
            g.insert_edge(Edge::of(1, 0)),
            Err(GraphError::DuplicateEdge(Edge::of(0, 1)))
        );
    }

    #[test]
    fn degree_bound_is_enforced() {
        let mut g = DynGraph::new(8, 2);
        g.insert_edge(Edge::of(0, 1)).unwrap();
        g.insert_edge(Edge::of(0, 2)).unwrap();
        let err = g.insert_edge(Edge::of(0, 5)).unwrap_err();
        assert!(matches!(
            err,
            GraphError::DegreeBoundViolated { node: 0, degree: 3, bound: 2, .. }
        ));
        // failed insert leaves no trace
        assert_eq!(g.degree(5), 0);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn delete_restores_degrees() {
        let mut g = DynGraph::new(3, 2);
        g.insert_edge(Edge::of(0, 1)).unwrap();
        g.delete_edge(Edge::of(0, 1)).unwrap();
        assert_eq!(g.degree(0), 0);
        assert_eq!(g.degree(1), 0);
        assert_eq!(g.max_degree(), 0);
    }

    #[test]
    fn delete_missing_edge() {
        let mut g = DynGraph::new(3, 2);
        assert_eq!(
            g.delete_edge(Edge::of(0, 1)),
            Err(GraphError::MissingEdge(Edge::of(0, 1)))
        );
    }

    #[test]
    fn path_delete_degree_arithmetic() {
        let mut g = DynGraph::from_edges(3, 2, [Edge::of(0, 1), Edge::of(1, 2)]).unwrap();
        g.delete_edge(Edge::of(1, 2)).unwrap();
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.degree(2), 0);
    }

    #[test]
    fn star_and_triangle_degrees() {
        let star = DynGraph::from_edges(5, 4, (1..5).map(|x| Edge::of(0, x))).unwrap();
        assert_eq!(star.degree(0), 4);
        assert_eq!(star.max_degree(), 4);

        assert_eq!(DynGraph::new(10, 4).max_degree(), 0);

        let tri =
            DynGraph::from_edges(3, 2, [Edge::of(0, 1), Edge::of(1, 2), Edge::of(0, 2)]).unwrap();
        for x in 0..3 {
            assert_eq!(tri.degree(x), 2);
        }
    }

    #[test]
    fn self_loop_and_range_errors() {
        assert_eq!(Edge::new(3, 3), Err(GraphError::SelfLoop(3)));
        let mut g = DynGraph::new(3, 2);
        assert!(matches!(
            g.insert_edge(Edge::of(1, 7)),
            Err(GraphError::NodeOutOfRange { node: 7, n: 3 })
        ));
    }

    #[test]
    fn max_degree_falls_after_deletes() {
        let mut g = DynGraph::from_edges(5, 4, (1..5).map(|x| Edge::of(0, x))).unwrap();
        for x in 1..4 {
            g.delete_edge(Edge::of(0, x)).unwrap();
        }
        assert_eq!(g.max_degree(), 1);
    }
}
