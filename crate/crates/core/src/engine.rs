//! Static and dynamic edge coloring built from partition, Nibble and greedy.
//!
//! Colors are laid out in disjoint integer ranges: subgraph `j` (0-based)
//! owns `j * S + 1 ..= (j + 1) * S` where `S` is the sub-palette size, and the
//! greedy fallback owns everything above `eta * S`. An edge shows its Nibble
//! color unless it is in the failed set, in which case it shows its greedy
//! color.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{DynGraph, Edge, FxIndexSet, GraphError};
use crate::greedy::GreedyState;
use crate::nibble;
use crate::palette::{PaletteError, PaletteState};
use crate::partition::PartitionState;
use crate::randomness::{EdgeRng, Params};

/// Final colors keyed by edge, in edge order.
pub type Coloring = BTreeMap<Edge, u64>;

/// Resampling fires when `Delta(H) > threshold * eps * Delta`; the analysis
/// uses 19.
pub const DEFAULT_RESAMPLE_THRESHOLD: f64 = 19.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("internal state corrupted: {0}")]
    Palette(#[from] PaletteError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UpdateOp {
    Insert,
    Delete,
}

/// What one update changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct UpdateReport {
    /// Edges whose tentative color changed.
    pub dirty_tentative: usize,
    /// Candidates examined while propagating.
    pub candidates: usize,
    pub h_inserts: usize,
    pub h_deletes: usize,
    /// Edges recolored by the greedy fallback (inserted edges included).
    pub greedy_recolors: usize,
    /// Edges whose final color changed; the updated edge counts as changed
    /// when it appears or disappears.
    pub total_recourse: usize,
    /// Set when this update triggered a full resample.
    pub resampled: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Summary of a one-shot static coloring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticColoring {
    #[serde(skip)]
    pub colors: Coloring,
    pub colors_used: usize,
    pub failed: usize,
    pub h_max_degree: usize,
    pub max_color: u64,
}

#[derive(Debug, Clone)]
pub struct Engine {
    params: Params,
    rng: EdgeRng,
    graph: DynGraph,
    partition: PartitionState,
    nibbles: BTreeMap<usize, PaletteState>,
    greedy: GreedyState,
    colors: FxHashMap<Edge, u64>,
    // edges per final color, for an O(1) distinct-color count
    color_counts: FxHashMap<u64, u32>,
    resample_threshold: Option<f64>,
    resamples: u64,
}

fn greedy_seed(seed: u64) -> u64 {
    seed.rotate_left(17) ^ 0x6772_6565_6479_0001
}

impl Engine {
    pub fn new(n: usize, params: Params, seed: u64) -> Self {
        let greedy = GreedyState::new(n, params.greedy_slack, greedy_seed(seed));
        Engine {
            rng: EdgeRng::new(seed),
            graph: DynGraph::new(n, params.delta_cap),
            partition: PartitionState::new(n, params.subgraphs, params.delta_cap),
            nibbles: BTreeMap::new(),
            greedy,
            colors: FxHashMap::default(),
            color_counts: FxHashMap::default(),
            resample_threshold: None,
            resamples: 0,
            params,
        }
    }

    /// Enable the automatic resample when `Delta(H)` exceeds
    /// `threshold * eps * Delta`.
    pub fn with_resample_threshold(mut self, threshold: Option<f64>) -> Self {
        self.resample_threshold = threshold;
        self
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.rng.seed()
    }

    pub fn rng(&self) -> &EdgeRng {
        &self.rng
    }

    pub fn graph(&self) -> &DynGraph {
        &self.graph
    }

    pub fn partition(&self) -> &PartitionState {
        &self.partition
    }

    pub fn greedy(&self) -> &GreedyState {
        &self.greedy
    }

    /// Nibble state of subgraph `j`, if it ever received an edge.
    pub fn nibble(&self, j: usize) -> Option<&PaletteState> {
        self.nibbles.get(&j)
    }

    pub fn nibbles(&self) -> impl Iterator<Item = (usize, &PaletteState)> + '_ {
        self.nibbles.iter().map(|(&j, s)| (j, s))
    }

    pub fn resamples(&self) -> u64 {
        self.resamples
    }

    pub fn failed_count(&self) -> usize {
        self.greedy.len()
    }

    /// Number of distinct final colors in use.
    pub fn colors_used(&self) -> usize {
        self.color_counts.len()
    }

    pub fn max_color(&self) -> u64 {
        self.color_counts.keys().copied().max().unwrap_or(0)
    }

    pub fn color_of(&self, e: Edge) -> Result<u64, EngineError> {
        self.colors
            .get(&e)
            .copied()
            .ok_or(EngineError::Graph(GraphError::MissingEdge(e)))
    }

    pub fn snapshot(&self) -> Coloring {
        self.colors.iter().map(|(&e, &c)| (e, c)).collect()
    }

    pub fn insert(&mut self, e: Edge) -> Result<UpdateReport, EngineError> {
        self.apply_update(UpdateOp::Insert, e)
    }

    pub fn delete(&mut self, e: Edge) -> Result<UpdateReport, EngineError> {
        self.apply_update(UpdateOp::Delete, e)
    }

    pub fn apply_update(&mut self, op: UpdateOp, e: Edge) -> Result<UpdateReport, EngineError> {
        let start = Instant::now();
        let mut report = self.apply_inner(op, e)?;
        if let Some(threshold) = self.resample_threshold {
            let limit = threshold * self.params.epsilon * self.params.delta_cap as f64;
            if self.greedy.graph().max_degree() as f64 > limit {
                report.total_recourse += self.resample_all()?;
                report.resampled = true;
            }
        }
        report.elapsed = start.elapsed();
        Ok(report)
    }

    fn apply_inner(&mut self, op: UpdateOp, e: Edge) -> Result<UpdateReport, EngineError> {
        let (j, dirty) = match op {
            UpdateOp::Insert => {
                self.graph.insert_edge(e)?;
                let draw = self.rng.edge_randomness(&self.params, e);
                self.partition.insert_at(e, draw.subgraph)?;
                let config = self.params.nibble_config();
                let state = self
                    .nibbles
                    .entry(draw.subgraph)
                    .or_insert_with(|| PaletteState::new(config));
                let dirty = nibble::insertion_update(state, e, draw.round, draw.colors)?;
                (draw.subgraph, dirty)
            }
            UpdateOp::Delete => {
                self.graph.delete_edge(e)?;
                let j = self.partition.route_delete(e)?;
                let state = self.nibbles.get_mut(&j).expect("routed subgraph has state");
                let dirty = nibble::deletion_update(state, e)?;
                self.rng.fresh_incarnation(e);
                (j, dirty)
            }
        };
        let mut report = UpdateReport {
            dirty_tentative: dirty.len(),
            candidates: dirty.candidates_examined(),
            ..UpdateReport::default()
        };

        let transitions = self
            .nibbles
            .get_mut(&j)
            .expect("updated subgraph has state")
            .take_transitions();
        let mut touched: FxIndexSet<Edge> = FxIndexSet::default();
        touched.insert(e);
        touched.extend(dirty.edges());
        touched.extend(transitions.iter().map(|t| t.edge()));

        // settle H: removals first, then additions
        let state = &self.nibbles[&j];
        let mut entering = Vec::new();
        for t in transitions.iter().map(|t| t.edge()) {
            let failed = state.failed_edge_query(t).unwrap_or(false);
            let in_h = self.greedy.contains(t);
            if in_h && !failed {
                let recolored = self.greedy.greedy_delete(t)?;
                report.h_deletes += 1;
                report.greedy_recolors += recolored.len();
                touched.extend(recolored);
            } else if failed && !in_h && !entering.contains(&t) {
                entering.push(t);
            }
        }
        for t in entering {
            self.greedy.greedy_insert(t)?;
            report.h_inserts += 1;
            report.greedy_recolors += 1;
        }

        report.total_recourse = self.refresh_colors(touched.iter().copied());
        Ok(report)
    }

    fn final_color(&self, e: Edge) -> Option<u64> {
        let j = self.partition.member(e)?;
        if let Ok(c) = self.greedy.greedy_color_of(e) {
            return Some(self.params.nibble_color_span() + c as u64);
        }
        let tentative = self.nibbles[&j].color_query(e).ok()??;
        Some(j as u64 * self.params.sub_palette_size as u64 + tentative as u64)
    }

    /// Recompute the final color of each edge in `edges` and return how many
    /// changed.
    fn refresh_colors(&mut self, edges: impl Iterator<Item = Edge>) -> usize {
        let mut changed = 0;
        for e in edges {
            let now = self.final_color(e);
            let before = match now {
                Some(c) => self.colors.insert(e, c),
                None => self.colors.remove(&e),
            };
            if before != now {
                changed += 1;
                if let Some(c) = before {
                    let count = self.color_counts.get_mut(&c).expect("counted color");
                    *count -= 1;
                    if *count == 0 {
                        self.color_counts.remove(&c);
                    }
                }
                if let Some(c) = now {
                    *self.color_counts.entry(c).or_insert(0) += 1;
                }
            }
        }
        changed
    }

    /// Delete and reinsert every live edge with fresh randomness. Returns
    /// the number of edges whose final color changed.
    pub fn resample_all(&mut self) -> Result<usize, EngineError> {
        let before = self.colors.clone();
        let edges = self.graph.sorted_edges();
        for &e in &edges {
            self.apply_inner(UpdateOp::Delete, e)?;
        }
        for &e in &edges {
            self.apply_inner(UpdateOp::Insert, e)?;
        }
        self.resamples += 1;
        Ok(edges.iter().filter(|e| before.get(e) != self.colors.get(e)).count())
    }
}

/// Color `g` from scratch: partition, Nibble on every subgraph, greedy on the
/// failed edges. Uses incarnation 0 of every edge's randomness.
pub fn static_color(g: &DynGraph, params: &Params, seed: u64) -> StaticColoring {
    let rng = EdgeRng::new(seed);
    let mut partition = PartitionState::new(g.node_count(), params.subgraphs, g.degree_bound());
    for e in g.sorted_edges() {
        partition
            .route_insert(e, &rng, params)
            .expect("edges of a simple graph route once");
    }
    let config = params.nibble_config();
    let mut greedy = GreedyState::new(g.node_count(), params.greedy_slack, greedy_seed(seed));
    let mut colors = Coloring::new();
    for (j, sub) in partition.subgraphs() {
        let state = nibble::static_nibble(sub, config, |e| {
            (rng.sample_round(params, e), rng.sample_color_sequence(params, e))
        });
        let mut failed: Vec<Edge> = state.failed().collect();
        failed.sort_unstable();
        for e in failed {
            greedy.greedy_insert(e).expect("failed edges are distinct");
        }
        for e in sub.edges() {
            if let Some(c) = state.color_query(e).expect("edge is stored") {
                if !state.failed_edge_query(e).expect("edge is stored") {
                    colors.insert(e, j as u64 * params.sub_palette_size as u64 + c as u64);
                }
            }
        }
    }
    for (e, c) in greedy.colors() {
        colors.insert(e, params.nibble_color_span() + c as u64);
    }
    let mut used: Vec<u64> = colors.values().copied().collect();
    used.sort_unstable();
    used.dedup();
    StaticColoring {
        colors_used: used.len(),
        max_color: used.last().copied().unwrap_or(0),
        failed: greedy.len(),
        h_max_degree: greedy.graph().max_degree(),
        colors,
    }
}
