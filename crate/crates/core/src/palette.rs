//! Per-subgraph tentative-coloring state.
//!
//! For every edge the structure stores its round `i_e`, its color sequence
//! `c_e(1..=K)` and its color index `l_e` (`0` means uncolored). The tentative
//! color is `c_e(l_e)`. Three indexes are kept in sync with those values:
//!
//! * `phi[(u, i, c)]`: edges at `u` of round `i` whose tentative color is `c`;
//! * `psi[(u, i, c)]`: edges at `u` of round `i` whose sequence contains `c`;
//! * `phi_prime[(u, c)]`: number of edges at `u` (any round) colored `c`.
//!
//! The failed set `F` holds every uncolored edge and every edge sharing its
//! tentative color with a same-round neighbour. Each change to `F` is appended
//! to a transition log that the owner can drain.
//!
//! Empty index entries are removed, so memory is proportional to the number
//! of live edges times the number of distinct colors in their sequences.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

use crate::graph::{Edge, FxIndexSet, NodeId};
use crate::randomness::NibbleConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaletteError {
    #[error("edge {0} is already stored")]
    DuplicateEdge(Edge),
    #[error("edge {0} is not stored")]
    MissingEdge(Edge),
    #[error("color index {index} for {edge} exceeds sequence length {len}")]
    IndexOutOfRange { edge: Edge, index: usize, len: usize },
    #[error("round {round} for {edge} outside 1..={max}")]
    RoundOutOfRange { edge: Edge, round: u32, max: u32 },
    #[error("color sequence for {edge}: {reason}")]
    BadSequence { edge: Edge, reason: String },
}

/// A change in failed-set membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailedTransition {
    Entered(Edge),
    Left(Edge),
}

impl FailedTransition {
    pub fn edge(&self) -> Edge {
        match *self {
            FailedTransition::Entered(e) | FailedTransition::Left(e) => e,
        }
    }
}

#[derive(Debug, Clone)]
struct EdgeSlot {
    round: u32,
    colors: Box<[u32]>,
    index: u32,
}

impl EdgeSlot {
    #[inline]
    fn color(&self) -> Option<u32> {
        self.color_at(self.index)
    }

    #[inline]
    fn color_at(&self, index: u32) -> Option<u32> {
        if index == 0 {
            None
        } else {
            Some(self.colors[index as usize - 1])
        }
    }
}

type RoundKey = (NodeId, u32, u32);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PaletteCounters {
    pub edge_palette_queries: u64,
    pub color_index_changes: u64,
}

#[derive(Debug, Clone)]
pub struct PaletteState {
    config: NibbleConfig,
    slots: FxHashMap<Edge, EdgeSlot>,
    failed: FxIndexSet<Edge>,
    phi: FxHashMap<RoundKey, FxIndexSet<Edge>>,
    psi: FxHashMap<RoundKey, FxIndexSet<Edge>>,
    phi_prime: FxHashMap<(NodeId, u32), u32>,
    // valid only while no edge of a later round than the one being reset
    // holds a color
    static_queries: bool,
    log_transitions: bool,
    transitions: Vec<FailedTransition>,
    counters: PaletteCounters,
}

impl PaletteState {
    pub fn new(config: NibbleConfig) -> Self {
        PaletteState {
            config,
            slots: FxHashMap::default(),
            failed: FxIndexSet::default(),
            phi: FxHashMap::default(),
            psi: FxHashMap::default(),
            phi_prime: FxHashMap::default(),
            static_queries: false,
            log_transitions: true,
            transitions: Vec::new(),
            counters: PaletteCounters::default(),
        }
    }

    pub fn config(&self) -> NibbleConfig {
        self.config
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.slots.contains_key(&e)
    }

    pub fn counters(&self) -> &PaletteCounters {
        &self.counters
    }

    /// Switch the O(1) palette test used by the one-shot static pass on or
    /// off. While on, the caller must only reset edges of round `i` when no
    /// edge of a round `> i` has a color.
    pub fn set_static_queries(&mut self, on: bool) {
        self.static_queries = on;
    }

    pub fn set_transition_log(&mut self, on: bool) {
        self.log_transitions = on;
        if !on {
            self.transitions.clear();
        }
    }

    pub fn take_transitions(&mut self) -> Vec<FailedTransition> {
        std::mem::take(&mut self.transitions)
    }

    fn slot(&self, e: Edge) -> Result<&EdgeSlot, PaletteError> {
        self.slots.get(&e).ok_or(PaletteError::MissingEdge(e))
    }

    pub fn round(&self, e: Edge) -> Result<u32, PaletteError> {
        Ok(self.slot(e)?.round)
    }

    pub fn color_index(&self, e: Edge) -> Result<u32, PaletteError> {
        Ok(self.slot(e)?.index)
    }

    pub fn color_sequence(&self, e: Edge) -> Result<&[u32], PaletteError> {
        Ok(&self.slot(e)?.colors)
    }

    /// Tentative color, `None` for uncolored.
    pub fn color_query(&self, e: Edge) -> Result<Option<u32>, PaletteError> {
        Ok(self.slot(e)?.color())
    }

    pub fn failed_edge_query(&self, e: Edge) -> Result<bool, PaletteError> {
        self.slot(e)?;
        Ok(self.failed.contains(&e))
    }

    pub fn failed(&self) -> impl Iterator<Item = Edge> + '_ {
        self.failed.iter().copied()
    }

    pub fn failed_len(&self) -> usize {
        self.failed.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.slots.keys().copied()
    }

    /// `(edge, l_e)` for every stored edge.
    pub fn color_indices(&self) -> impl Iterator<Item = (Edge, u32)> + '_ {
        self.slots.iter().map(|(&e, s)| (e, s.index))
    }

    /// Edges at `x` of round `round` whose sequence contains `color`.
    pub fn psi(&self, x: NodeId, round: u32, color: u32) -> impl Iterator<Item = Edge> + '_ {
        self.psi
            .get(&(x, round, color))
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    /// Edges at `x` of round `round` tentatively colored `color`.
    pub fn phi(&self, x: NodeId, round: u32, color: u32) -> impl Iterator<Item = Edge> + '_ {
        self.phi
            .get(&(x, round, color))
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    #[inline]
    fn phi_len(&self, x: NodeId, round: u32, color: u32) -> usize {
        self.phi.get(&(x, round, color)).map_or(0, |s| s.len())
    }

    fn mark_failed(&mut self, e: Edge, failed: bool) {
        let changed = if failed {
            self.failed.insert(e)
        } else {
            self.failed.swap_remove(&e)
        };
        if changed && self.log_transitions {
            self.transitions.push(if failed {
                FailedTransition::Entered(e)
            } else {
                FailedTransition::Left(e)
            });
        }
    }

    pub fn ds_insert(&mut self, e: Edge, round: u32, colors: Vec<u32>) -> Result<(), PaletteError> {
        if self.slots.contains_key(&e) {
            return Err(PaletteError::DuplicateEdge(e));
        }
        let max = self.config.idle_round();
        if round == 0 || round > max {
            return Err(PaletteError::RoundOutOfRange { edge: e, round, max });
        }
        if colors.len() != self.config.seq_len {
            return Err(PaletteError::BadSequence {
                edge: e,
                reason: format!("length {} != {}", colors.len(), self.config.seq_len),
            });
        }
        if let Some(&c) = colors
            .iter()
            .find(|&&c| c == 0 || c > self.config.palette_size)
        {
            return Err(PaletteError::BadSequence {
                edge: e,
                reason: format!("color {c} outside 1..={}", self.config.palette_size),
            });
        }
        for x in e.endpoints() {
            for &c in &colors {
                self.psi.entry((x, round, c)).or_default().insert(e);
            }
        }
        self.slots.insert(
            e,
            EdgeSlot {
                round,
                colors: colors.into_boxed_slice(),
                index: 0,
            },
        );
        self.mark_failed(e, true);
        Ok(())
    }

    pub fn ds_delete(&mut self, e: Edge) -> Result<(), PaletteError> {
        self.set_color_index(e, 0)?;
        let slot = self.slots.remove(&e).expect("checked by set_color_index");
        self.mark_failed(e, false);
        for x in e.endpoints() {
            for &c in slot.colors.iter() {
                let key = (x, slot.round, c);
                if let Some(set) = self.psi.get_mut(&key) {
                    set.swap_remove(&e);
                    if set.is_empty() {
                        self.psi.remove(&key);
                    }
                }
            }
        }
        Ok(())
    }

    fn phi_insert(&mut self, x: NodeId, round: u32, color: u32, e: Edge) {
        self.phi.entry((x, round, color)).or_default().insert(e);
        *self.phi_prime.entry((x, color)).or_insert(0) += 1;
    }

    fn phi_remove(&mut self, x: NodeId, round: u32, color: u32, e: Edge) {
        let key = (x, round, color);
        if let Some(set) = self.phi.get_mut(&key) {
            set.swap_remove(&e);
            if set.is_empty() {
                self.phi.remove(&key);
            }
        }
        if let Some(count) = self.phi_prime.get_mut(&(x, color)) {
            *count -= 1;
            if *count == 0 {
                self.phi_prime.remove(&(x, color));
            }
        }
    }

    /// Set `l_e := index`, then repair `F` for `e` and the at most four
    /// neighbours whose conflict status can flip.
    pub fn set_color_index(&mut self, e: Edge, index: u32) -> Result<(), PaletteError> {
        let len = self.config.seq_len;
        let slot = self.slots.get_mut(&e).ok_or(PaletteError::MissingEdge(e))?;
        if index as usize > len {
            return Err(PaletteError::IndexOutOfRange {
                edge: e,
                index: index as usize,
                len,
            });
        }
        if slot.index == index {
            return Ok(());
        }
        let round = slot.round;
        let prev = slot.color();
        slot.index = index;
        let next = slot.color();
        self.counters.color_index_changes += 1;
        if prev == next {
            // same color at a different position: no index or F change
            return Ok(());
        }

        let [u, v] = e.endpoints();
        if let Some(c) = prev {
            self.phi_remove(u, round, c, e);
            self.phi_remove(v, round, c, e);
        }
        if let Some(c) = next {
            self.phi_insert(u, round, c, e);
            self.phi_insert(v, round, c, e);
        }

        let mut touched: SmallVec<[Edge; 5]> = SmallVec::new();
        touched.push(e);
        if let Some(c) = next {
            for x in [u, v] {
                if self.phi_len(x, round, c) == 2 {
                    touched.extend(self.phi(x, round, c));
                }
            }
        }
        if let Some(c) = prev {
            for x in [u, v] {
                if self.phi_len(x, round, c) == 1 {
                    touched.extend(self.phi(x, round, c));
                }
            }
        }
        for f in touched {
            self.refresh_failed(f);
        }
        Ok(())
    }

    fn refresh_failed(&mut self, f: Edge) {
        let slot = &self.slots[&f];
        let failed = match slot.color() {
            None => true,
            Some(c) => {
                self.phi_len(f.u(), slot.round, c) > 1 || self.phi_len(f.v(), slot.round, c) > 1
            }
        };
        self.mark_failed(f, failed);
    }

    /// YES iff no edge at `x` of a round `< round` is tentatively colored
    /// `color`.
    pub fn node_palette_query(&self, x: NodeId, round: u32, color: u32) -> bool {
        (1..round).all(|r| self.phi_len(x, r, color) == 0)
    }

    pub fn edge_palette_query(&self, e: Edge, round: u32, color: u32) -> bool {
        self.node_palette_query(e.u(), round, color) && self.node_palette_query(e.v(), round, color)
    }

    #[inline]
    fn palette_has(&self, e: Edge, round: u32, color: u32) -> bool {
        if self.static_queries {
            let free = |x: NodeId| {
                let total = self.phi_prime.get(&(x, color)).copied().unwrap_or(0) as usize;
                total == self.phi_len(x, round, color)
            };
            free(e.u()) && free(e.v())
        } else {
            self.edge_palette_query(e, round, color)
        }
    }

    /// Move `e` to the first sequence position whose color is in its palette
    /// (or to `0` if there is none). Returns `Some(e)` iff `l_e` changed.
    pub fn reset_color(&mut self, e: Edge) -> Result<Option<Edge>, PaletteError> {
        let slot = self.slot(e)?;
        let previous = slot.index;
        let mut chosen = 0;
        let mut queries = 0;
        if slot.round <= self.config.rounds {
            for (pos, &c) in slot.colors.iter().enumerate() {
                queries += 1;
                if self.palette_has(e, slot.round, c) {
                    chosen = pos as u32 + 1;
                    break;
                }
            }
        }
        self.counters.edge_palette_queries += queries;
        self.set_color_index(e, chosen)?;
        Ok((chosen != previous).then_some(e))
    }

    /// Rebuild every index from the per-edge values and compare with the
    /// maintained ones.
    pub fn audit(&self) -> Result<(), String> {
        let mut phi: FxHashMap<RoundKey, usize> = FxHashMap::default();
        let mut psi: FxHashMap<RoundKey, usize> = FxHashMap::default();
        let mut phi_prime: FxHashMap<(NodeId, u32), u32> = FxHashMap::default();
        for (&e, slot) in &self.slots {
            for x in e.endpoints() {
                if let Some(c) = slot.color() {
                    *phi.entry((x, slot.round, c)).or_default() += 1;
                    *phi_prime.entry((x, c)).or_default() += 1;
                    if !self.phi.get(&(x, slot.round, c)).is_some_and(|s| s.contains(&e)) {
                        return Err(format!("{e} missing from phi({x}, {}, {c})", slot.round));
                    }
                }
                let mut seen: SmallVec<[u32; 16]> = SmallVec::new();
                for &c in slot.colors.iter() {
                    if seen.contains(&c) {
                        continue;
                    }
                    seen.push(c);
                    *psi.entry((x, slot.round, c)).or_default() += 1;
                    if !self.psi.get(&(x, slot.round, c)).is_some_and(|s| s.contains(&e)) {
                        return Err(format!("{e} missing from psi({x}, {}, {c})", slot.round));
                    }
                }
            }
        }
        let sizes = |m: &FxHashMap<RoundKey, FxIndexSet<Edge>>| -> FxHashMap<RoundKey, usize> {
            m.iter().map(|(&k, s)| (k, s.len())).collect()
        };
        if sizes(&self.phi) != phi {
            return Err("phi holds stale entries".into());
        }
        if sizes(&self.psi) != psi {
            return Err("psi holds stale entries".into());
        }
        if self.phi_prime != phi_prime {
            return Err("phi' counters disagree with phi".into());
        }
        for (&e, slot) in &self.slots {
            let expect = match slot.color() {
                None => true,
                Some(c) => e
                    .endpoints()
                    .iter()
                    .any(|&x| phi[&(x, slot.round, c)] > 1),
            };
            if expect != self.failed.contains(&e) {
                return Err(format!("{e}: failed flag {} but expected {expect}", !expect));
            }
        }
        if let Some(e) = self.failed.iter().find(|e| !self.slots.contains_key(e)) {
            return Err(format!("failed set holds absent edge {e}"));
        }
        Ok(())
    }
}
