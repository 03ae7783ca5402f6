//! Dynamic `(2+delta) * Delta(H)` edge coloring by rejection sampling.
//!
//! Every edge `(u, v)` keeps a color in `[ceil((2+delta) * max(deg u, deg v))]`.
//! A random color from that range is free with probability at least
//! `delta / 3`, so an insertion samples `3 / delta` colors in expectation.
//! A deletion lowers two degrees, which can push at most three colors per
//! endpoint out of range; the edges holding them are recolored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::graph::{DynGraph, Edge, GraphError, NodeId};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GreedyCounters {
    /// Colorings performed (insertions plus repairs).
    pub colorings: u64,
    /// Colors drawn across all colorings.
    pub samples: u64,
    /// Colorings that hit the sampling cap and fell back to a scan.
    pub fallbacks: u64,
}

#[derive(Debug, Clone)]
pub struct GreedyState {
    graph: DynGraph,
    chi: FxHashMap<Edge, u32>,
    psi: FxHashMap<(NodeId, u32), Edge>,
    slack: f64,
    max_attempts: u64,
    rng: ChaCha8Rng,
    counters: GreedyCounters,
}

impl GreedyState {
    pub fn new(n: usize, slack: f64, seed: u64) -> Self {
        assert!(slack > 0.0 && slack <= 1.0, "slack must lie in (0, 1]");
        GreedyState {
            graph: DynGraph::unbounded(n),
            chi: FxHashMap::default(),
            psi: FxHashMap::default(),
            slack,
            max_attempts: 64 * (3.0 / slack).ceil() as u64,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counters: GreedyCounters::default(),
        }
    }

    pub fn graph(&self) -> &DynGraph {
        &self.graph
    }

    pub fn counters(&self) -> &GreedyCounters {
        &self.counters
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.graph.contains(e)
    }

    pub fn len(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Size of the range an edge whose larger endpoint degree is `degree`
    /// may use.
    pub fn palette_for_degree(&self, degree: usize) -> u32 {
        ((2.0 + self.slack) * degree as f64 - 1e-9).ceil().max(0.0) as u32
    }

    /// Upper bound on the colors in use: `ceil((2+delta) * Delta(H))`.
    pub fn color_bound(&self) -> u32 {
        self.palette_for_degree(self.graph.max_degree())
    }

    fn edge_palette(&self, e: Edge) -> u32 {
        self.palette_for_degree(self.graph.degree(e.u()).max(self.graph.degree(e.v())))
    }

    pub fn greedy_color_of(&self, e: Edge) -> Result<u32, GraphError> {
        self.chi.get(&e).copied().ok_or(GraphError::MissingEdge(e))
    }

    pub fn colors(&self) -> impl Iterator<Item = (Edge, u32)> + '_ {
        self.chi.iter().map(|(&e, &c)| (e, c))
    }

    #[inline]
    fn is_free(&self, e: Edge, c: u32) -> bool {
        !self.psi.contains_key(&(e.u(), c)) && !self.psi.contains_key(&(e.v(), c))
    }

    fn assign(&mut self, e: Edge) {
        let palette = self.edge_palette(e);
        self.counters.colorings += 1;
        let mut chosen = None;
        for _ in 0..self.max_attempts {
            self.counters.samples += 1;
            let c = self.rng.gen_range(1..=palette);
            if self.is_free(e, c) {
                chosen = Some(c);
                break;
            }
        }
        let c = chosen.unwrap_or_else(|| {
            self.counters.fallbacks += 1;
            (1..=palette)
                .find(|&c| self.is_free(e, c))
                .expect("palette exceeds the colors blocked at both endpoints")
        });
        self.chi.insert(e, c);
        self.psi.insert((e.u(), c), e);
        self.psi.insert((e.v(), c), e);
    }

    fn unassign(&mut self, e: Edge) -> u32 {
        let c = self.chi.remove(&e).expect("colored edge");
        self.psi.remove(&(e.u(), c));
        self.psi.remove(&(e.v(), c));
        c
    }

    /// Insert and color `e`. Always returns `[e]`.
    pub fn greedy_insert(&mut self, e: Edge) -> Result<Vec<Edge>, GraphError> {
        self.graph.insert_edge(e)?;
        self.assign(e);
        Ok(vec![e])
    }

    /// Remove `e` and recolor the edges whose color fell out of range.
    /// Returns those edges; at most six.
    pub fn greedy_delete(&mut self, e: Edge) -> Result<Vec<Edge>, GraphError> {
        self.graph.delete_edge(e)?;
        self.unassign(e);
        let mut stale: SmallVec<[Edge; 6]> = SmallVec::new();
        for x in e.endpoints() {
            let degree = self.graph.degree(x);
            let lo = self.palette_for_degree(degree);
            let hi = self.palette_for_degree(degree + 1);
            for c in lo + 1..=hi {
                if let Some(&f) = self.psi.get(&(x, c)) {
                    if c > self.edge_palette(f) && !stale.contains(&f) {
                        stale.push(f);
                    }
                }
            }
        }
        for &f in &stale {
            self.unassign(f);
        }
        for &f in &stale {
            self.assign(f);
        }
        Ok(stale.into_vec())
    }

    /// Check properness, the per-edge range and the reverse index.
    pub fn audit(&self) -> Result<(), String> {
        if self.chi.len() != self.graph.edge_count() {
            return Err("colored edge count differs from graph".into());
        }
        for e in self.graph.edges() {
            let c = *self.chi.get(&e).ok_or(format!("{e} uncolored"))?;
            if c == 0 || c > self.edge_palette(e) {
                return Err(format!("{e} color {c} outside 1..={}", self.edge_palette(e)));
            }
            for x in e.endpoints() {
                if self.psi.get(&(x, c)) != Some(&e) {
                    return Err(format!("psi({x}, {c}) does not point at {e}"));
                }
            }
        }
        if self.psi.len() != 2 * self.chi.len() {
            return Err("psi holds stale entries".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_edge_uses_three_colors() {
        let mut gs = GreedyState::new(4, 1.0, 1);
        let e = Edge::of(0, 1);
        assert_eq!(gs.greedy_insert(e), Ok(vec![e]));
        assert!((1..=3).contains(&gs.greedy_color_of(e).unwrap()));
        assert_eq!(gs.counters().samples, 1);
    }

    #[test]
    fn matching_delete_recolors_nothing() {
        let mut gs = GreedyState::new(8, 1.0, 2);
        for k in 0..4 {
            gs.greedy_insert(Edge::of(2 * k, 2 * k + 1)).unwrap();
        }
        assert_eq!(gs.greedy_delete(Edge::of(0, 1)), Ok(vec![]));
        gs.audit().unwrap();
    }

    #[test]
    fn degree_drop_forces_recolor() {
        // star at 0 with two leaves: the second edge may take a color in 4..=6
        for seed in 0..200 {
            let mut gs = GreedyState::new(3, 1.0, seed);
            let a = Edge::of(0, 1);
            let b = Edge::of(0, 2);
            gs.greedy_insert(a).unwrap();
            gs.greedy_insert(b).unwrap();
            let high = gs.greedy_color_of(b).unwrap() > 3;
            let recolored = gs.greedy_delete(a).unwrap();
            if high {
                assert_eq!(recolored, vec![b]);
            } else {
                assert!(recolored.is_empty());
            }
            assert!(gs.greedy_color_of(b).unwrap() <= 3);
            gs.audit().unwrap();
        }
    }

    #[test]
    fn lookups_and_errors() {
        let mut gs = GreedyState::new(3, 0.5, 3);
        let e = Edge::of(0, 2);
        assert_eq!(gs.greedy_color_of(e), Err(GraphError::MissingEdge(e)));
        gs.greedy_insert(e).unwrap();
        let c = gs.greedy_color_of(e).unwrap();
        assert_eq!(gs.greedy_insert(e), Err(GraphError::DuplicateEdge(e)));
        assert_eq!(gs.greedy_color_of(e), Ok(c));
        gs.greedy_delete(e).unwrap();
        assert_eq!(gs.greedy_delete(e), Err(GraphError::MissingEdge(e)));
        assert!(gs.greedy_color_of(e).is_err());
    }

    #[test]
    fn palette_sizes() {
        let gs = GreedyState::new(1, 1.0, 0);
        assert_eq!(gs.palette_for_degree(0), 0);
        assert_eq!(gs.palette_for_degree(1), 3);
        assert_eq!(gs.palette_for_degree(5), 15);
        let gs = GreedyState::new(1, 0.5, 0);
        assert_eq!(gs.palette_for_degree(1), 3); // ceil(2.5)
        assert_eq!(gs.palette_for_degree(2), 5);
    }
}
