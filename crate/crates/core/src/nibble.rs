//! Nibble tentative coloring: the one-shot pass and its dynamic maintenance.
//!
//! Round `i` edges pick the first entry of their color sequence that no
//! neighbouring edge of an earlier round holds. Because that choice only
//! depends on earlier rounds, an update at round `i*` can only disturb edges
//! of rounds `> i*`, and only those whose sequence contains a color that a
//! disturbed edge gained or lost. [`propagate_changes`] walks the rounds in
//! order and re-runs the choice on exactly those candidates, found through
//! the `psi` index.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::graph::{DynGraph, Edge, FxIndexSet};
use crate::palette::{PaletteError, PaletteState};
use crate::randomness::NibbleConfig;

/// Edges whose tentative color changed during one update, with the color
/// each of them (and each candidate examined) held before the update.
#[derive(Debug, Clone, Default)]
pub struct DirtySet {
    changed: FxIndexSet<Edge>,
    prev: FxHashMap<Edge, Option<u32>>,
    candidates: usize,
}

impl DirtySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seed the set with an edge that changed outside the propagation loop.
    pub fn mark(&mut self, e: Edge, prev: Option<u32>, changed: bool) {
        self.prev.insert(e, prev);
        if changed {
            self.changed.insert(e);
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.changed.iter().copied()
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.changed.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.changed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changed.is_empty()
    }

    /// Tentative color before the update, for changed edges and examined
    /// candidates.
    pub fn prev_color(&self, e: Edge) -> Option<Option<u32>> {
        self.prev.get(&e).copied()
    }

    /// Total size of the per-round candidate sets.
    pub fn candidates_examined(&self) -> usize {
        self.candidates
    }
}

/// Run Nibble from scratch on `g`. `draws` supplies each edge's round and
/// color sequence.
pub fn static_nibble<F>(g: &DynGraph, config: NibbleConfig, draws: F) -> PaletteState
where
    F: FnMut(Edge) -> (u32, Vec<u32>),
{
    run_static(g, config, draws, None)
}

/// [`static_nibble`] with every round's edges processed in a random order
/// drawn from `shuffle_seed`. Produces the same state as the unshuffled run.
pub fn static_nibble_shuffled<F>(
    g: &DynGraph,
    config: NibbleConfig,
    draws: F,
    shuffle_seed: u64,
) -> PaletteState
where
    F: FnMut(Edge) -> (u32, Vec<u32>),
{
    run_static(g, config, draws, Some(shuffle_seed))
}

fn run_static<F>(
    g: &DynGraph,
    config: NibbleConfig,
    mut draws: F,
    shuffle_seed: Option<u64>,
) -> PaletteState
where
    F: FnMut(Edge) -> (u32, Vec<u32>),
{
    let mut state = PaletteState::new(config);
    state.set_transition_log(false);
    let mut by_round: Vec<Vec<Edge>> = vec![Vec::new(); config.idle_round() as usize + 1];
    for e in g.edges() {
        let (round, colors) = draws(e);
        state
            .ds_insert(e, round, colors)
            .expect("static_nibble: invalid draw for edge");
        by_round[round as usize].push(e);
    }
    let mut shuffler = shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    state.set_static_queries(true);
    for round in 1..=config.rounds as usize {
        if let Some(rng) = shuffler.as_mut() {
            by_round[round].shuffle(rng);
        }
        for &e in &by_round[round] {
            state.reset_color(e).expect("edge was inserted above");
        }
    }
    state.set_static_queries(false);
    state.set_transition_log(true);
    state
}

/// Insert `e` with the given draw and restore the Nibble output.
pub fn insertion_update(
    state: &mut PaletteState,
    e: Edge,
    round: u32,
    colors: Vec<u32>,
) -> Result<DirtySet, PaletteError> {
    state.ds_insert(e, round, colors)?;
    let mut dirty = DirtySet::new();
    let changed = state.reset_color(e)?.is_some();
    dirty.mark(e, None, changed);
    propagate_changes(state, dirty, round)
}

/// Delete `e` and restore the Nibble output.
pub fn deletion_update(state: &mut PaletteState, e: Edge) -> Result<DirtySet, PaletteError> {
    let prev = state.color_query(e)?;
    let round = state.round(e)?;
    state.ds_delete(e)?;
    let mut dirty = DirtySet::new();
    dirty.mark(e, prev, prev.is_some());
    propagate_changes(state, dirty, round)
}

/// Re-run the color choice for every edge of rounds `from_round+1..=T` that
/// a changed edge could have affected. `dirty` must hold every changed edge of
/// rounds `<= from_round` together with its previous color.
pub fn propagate_changes(
    state: &mut PaletteState,
    mut dirty: DirtySet,
    from_round: u32,
) -> Result<DirtySet, PaletteError> {
    let rounds = state.config().rounds;
    let mut candidates: FxIndexSet<Edge> = FxIndexSet::default();
    for round in from_round.saturating_add(1)..=rounds {
        if dirty.changed.is_empty() {
            break;
        }
        candidates.clear();
        for &f in &dirty.changed {
            // deleted edges read as uncolored
            let now = state.color_query(f).unwrap_or(None);
            let before = dirty.prev.get(&f).copied().flatten();
            for c in [now, before].into_iter().flatten() {
                for x in f.endpoints() {
                    candidates.extend(state.psi(x, round, c));
                }
            }
        }
        dirty.candidates += candidates.len();
        for &g in &candidates {
            let c = state.color_query(g)?;
            dirty.prev.insert(g, c);
        }
        for &g in &candidates {
            if let Some(g) = state.reset_color(g)? {
                dirty.changed.insert(g);
            }
        }
    }
    Ok(dirty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rounds: u32, seq_len: usize, palette_size: u32) -> NibbleConfig {
        NibbleConfig {
            rounds,
            seq_len,
            palette_size,
        }
    }

    #[test]
    fn single_edge_static() {
        let g = DynGraph::from_edges(2, 1, [Edge::of(0, 1)]).unwrap();
        let s = static_nibble(&g, cfg(1, 3, 3), |_| (1, vec![2, 1, 3]));
        assert_eq!(s.color_query(Edge::of(0, 1)), Ok(Some(2)));
        assert_eq!(s.failed_len(), 0);

        let s = static_nibble(&g, cfg(1, 3, 3), |_| (2, vec![2, 1, 3]));
        assert_eq!(s.color_query(Edge::of(0, 1)), Ok(None));
        assert_eq!(s.failed_len(), 1);
    }

    #[test]
    fn same_round_clash_fails_both() {
        let g = DynGraph::from_edges(3, 2, [Edge::of(0, 1), Edge::of(1, 2)]).unwrap();
        let s = static_nibble(&g, cfg(1, 2, 3), |_| (1, vec![1, 2]));
        assert!(s.failed_edge_query(Edge::of(0, 1)).unwrap());
        assert!(s.failed_edge_query(Edge::of(1, 2)).unwrap());
    }

    #[test]
    fn insertion_into_empty_state() {
        let mut s = PaletteState::new(cfg(2, 2, 4));
        let e = Edge::of(0, 1);
        let d = insertion_update(&mut s, e, 1, vec![3, 4]).unwrap();
        assert_eq!(d.edges().collect::<Vec<_>>(), vec![e]);
        assert_eq!(s.color_query(e), Ok(Some(3)));
    }

    #[test]
    fn idle_round_insertion_does_nothing() {
        let mut s = PaletteState::new(cfg(2, 2, 4));
        let e = Edge::of(0, 1);
        let d = insertion_update(&mut s, e, 3, vec![3, 4]).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.candidates_examined(), 0);
        assert!(s.failed_edge_query(e).unwrap());
    }

    #[test]
    fn deleting_uncolored_edge_is_quiet() {
        let mut s = PaletteState::new(cfg(2, 1, 4));
        let e = Edge::of(0, 1);
        insertion_update(&mut s, e, 3, vec![1]).unwrap();
        insertion_update(&mut s, Edge::of(0, 2), 2, vec![1]).unwrap();
        let d = deletion_update(&mut s, e).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.candidates_examined(), 0);
    }

    #[test]
    fn deleting_blocker_lowers_neighbour_index() {
        let mut s = PaletteState::new(cfg(2, 2, 4));
        let blocker = Edge::of(0, 1);
        let f = Edge::of(1, 2);
        insertion_update(&mut s, blocker, 1, vec![3, 3]).unwrap();
        insertion_update(&mut s, f, 2, vec![3, 4]).unwrap();
        assert_eq!(s.color_index(f), Ok(2));
        let d = deletion_update(&mut s, blocker).unwrap();
        assert_eq!(s.color_index(f), Ok(1));
        assert!(d.contains(blocker));
        assert!(d.contains(f));
        assert_eq!(d.prev_color(f), Some(Some(4)));
    }

    #[test]
    fn three_round_cascade() {
        // a (round 1) takes color 1 from b (round 2), which moves to 2 and
        // takes it from c (round 3), which moves to 3.
        let mut s = PaletteState::new(cfg(3, 3, 3));
        let b = Edge::of(1, 2);
        let c = Edge::of(2, 3);
        insertion_update(&mut s, b, 2, vec![1, 2, 2]).unwrap();
        insertion_update(&mut s, c, 3, vec![2, 3, 3]).unwrap();
        assert_eq!(s.color_query(b), Ok(Some(1)));
        assert_eq!(s.color_query(c), Ok(Some(2)));
        let a = Edge::of(0, 1);
        let d = insertion_update(&mut s, a, 1, vec![1, 1, 1]).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(s.color_query(b), Ok(Some(2)));
        assert_eq!(s.color_query(c), Ok(Some(3)));
        s.audit().unwrap();
    }
}
