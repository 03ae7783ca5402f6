//! Random split of the live edge set into `eta` subgraphs.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::graph::{DynGraph, Edge, GraphError};
use crate::randomness::{EdgeRng, Params};

#[derive(Debug, Clone)]
pub struct PartitionState {
    n: usize,
    eta: usize,
    degree_bound: usize,
    member: FxHashMap<Edge, usize>,
    // created on first use; eta can be far larger than the edge count
    subgraphs: BTreeMap<usize, DynGraph>,
}

impl PartitionState {
    /// `eta` empty subgraphs on `n` nodes, each with degree bound
    /// `degree_bound`.
    pub fn new(n: usize, eta: usize, degree_bound: usize) -> Self {
        assert!(eta >= 1);
        PartitionState {
            n,
            eta,
            degree_bound,
            member: FxHashMap::default(),
            subgraphs: BTreeMap::new(),
        }
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    /// Subgraph `j`, or `None` if no edge was ever routed there.
    pub fn subgraph(&self, j: usize) -> Option<&DynGraph> {
        self.subgraphs.get(&j)
    }

    /// Subgraphs that have received at least one edge, by index.
    pub fn subgraphs(&self) -> impl Iterator<Item = (usize, &DynGraph)> + '_ {
        self.subgraphs.iter().map(|(&j, g)| (j, g))
    }

    /// 0-based subgraph holding `e`, if it is live.
    pub fn member(&self, e: Edge) -> Option<usize> {
        self.member.get(&e).copied()
    }

    pub fn len(&self) -> usize {
        self.member.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member.is_empty()
    }

    /// Place `e` in the subgraph its current draw names.
    pub fn route_insert(
        &mut self,
        e: Edge,
        rng: &EdgeRng,
        params: &Params,
    ) -> Result<usize, GraphError> {
        if self.member.contains_key(&e) {
            return Err(GraphError::DuplicateEdge(e));
        }
        let j = rng.sample_partition_index(params, e);
        self.insert_at(e, j)?;
        Ok(j)
    }

    /// Place `e` in subgraph `j` directly.
    pub fn insert_at(&mut self, e: Edge, j: usize) -> Result<(), GraphError> {
        if self.member.contains_key(&e) {
            return Err(GraphError::DuplicateEdge(e));
        }
        assert!(j < self.eta, "subgraph index {j} >= eta {}", self.eta);
        let (n, bound) = (self.n, self.degree_bound);
        self.subgraphs
            .entry(j)
            .or_insert_with(|| DynGraph::new(n, bound))
            .insert_edge(e)?;
        self.member.insert(e, j);
        Ok(())
    }

    pub fn route_delete(&mut self, e: Edge) -> Result<usize, GraphError> {
        let j = self.member.remove(&e).ok_or(GraphError::MissingEdge(e))?;
        self.subgraphs
            .get_mut(&j)
            .expect("routed edge has a subgraph")
            .delete_edge(e)?;
        Ok(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_subgraph_takes_everything() {
        let params = Params::derive(0.5, 2, 1.0).unwrap();
        let rng = EdgeRng::new(3);
        let mut p = PartitionState::new(10, params.subgraphs, 2);
        for v in 1..3 {
            assert_eq!(p.route_insert(Edge::of(0, v), &rng, &params), Ok(0));
        }
        assert_eq!(p.subgraph(0).unwrap().edge_count(), 2);
    }

    #[test]
    fn routing_follows_the_draw_and_fresh_draws_can_move() {
        let params = Params::derive(0.3, 64, 1.0).unwrap();
        let mut rng = EdgeRng::new(11);
        let mut p = PartitionState::new(50, params.subgraphs, 64);
        let mut moved = 0;
        for v in 1..40 {
            let e = Edge::of(0, v);
            let j = p.route_insert(e, &rng, &params).unwrap();
            assert_eq!(j, rng.sample_partition_index(&params, e));
            assert_eq!(p.member(e), Some(j));
            assert_eq!(p.route_delete(e), Ok(j));
            assert_eq!(p.member(e), None);
            rng.fresh_incarnation(e);
            if p.route_insert(e, &rng, &params).unwrap() != j {
                moved += 1;
            }
        }
        assert!(moved > 0);
    }

    #[test]
    fn duplicate_and_missing() {
        let params = Params::derive(0.3, 64, 1.0).unwrap();
        let rng = EdgeRng::new(1);
        let mut p = PartitionState::new(5, params.subgraphs, 64);
        let e = Edge::of(1, 2);
        p.route_insert(e, &rng, &params).unwrap();
        assert_eq!(
            p.route_insert(e, &rng, &params),
            Err(GraphError::DuplicateEdge(e))
        );
        p.route_delete(e).unwrap();
        assert_eq!(p.route_delete(e), Err(GraphError::MissingEdge(e)));
    }
}
