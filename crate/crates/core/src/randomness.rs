//! Algorithm parameters and the per-edge random choices.
//!
//! Every random bit attached to an edge (subgraph index, round, color
//! sequence) is a pure function of `(seed, edge, incarnation)`. A 64-bit key
//! is mixed from those values and expanded with ChaCha8, so nothing has to be
//! sampled up front and a replay with the same seed reproduces every draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Edge;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("epsilon must lie in (0, 1/2], got {0}")]
    InvalidEpsilon(f64),
    #[error("degree bound must be positive")]
    InvalidDegreeBound,
    #[error("greedy slack must lie in (0, 1], got {0}")]
    InvalidSlack(f64),
}

/// Largest epsilon the analysis covers; larger values up to 1/2 are accepted
/// with [`Params::relaxed_epsilon`] set.
pub const EPSILON_ANALYSED_MAX: f64 = 0.1;

const FLOAT_SLACK: f64 = 1e-9;

/// `ceil(x)` that does not round `2.0000000000004` up to 3.
fn ceil_tol(x: f64) -> u64 {
    (x - FLOAT_SLACK).ceil().max(0.0) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    pub epsilon: f64,
    /// Promised maximum degree of the input graph.
    pub delta_cap: usize,
    /// Number of Nibble rounds.
    pub rounds: u32,
    /// Length of each edge's color sequence.
    pub seq_len: usize,
    pub gamma: f64,
    pub delta_prime: u64,
    /// Number of subgraphs the edge set is split into.
    pub subgraphs: usize,
    /// Colors available to each subgraph's Nibble run.
    pub sub_palette_size: u32,
    pub greedy_slack: f64,
    /// Set when epsilon exceeds [`EPSILON_ANALYSED_MAX`].
    pub relaxed_epsilon: bool,
}

impl Params {
    pub fn derive(epsilon: f64, delta_cap: usize, greedy_slack: f64) -> Result<Self, ParamError> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(ParamError::InvalidEpsilon(epsilon));
        }
        if delta_cap == 0 {
            return Err(ParamError::InvalidDegreeBound);
        }
        if !(greedy_slack > 0.0 && greedy_slack <= 1.0) {
            return Err(ParamError::InvalidSlack(greedy_slack));
        }
        let inv = 1.0 / epsilon;
        // T >= 1 on all of (0, 1/2]
        let rounds = ((inv * inv.ln()) + FLOAT_SLACK).floor() as u32;
        let seq_len = ceil_tol(8.0 * inv * inv * inv.ln()) as usize;
        let gamma = 1.0 / (30.0 * rounds as f64);
        let root = (delta_cap as f64).powf(gamma);
        let mut delta_prime = ceil_tol(root);
        if delta_cap >= 2 {
            delta_prime = delta_prime.max(2);
        }
        let mut params = Params {
            epsilon,
            delta_cap,
            rounds,
            seq_len,
            gamma,
            delta_prime,
            subgraphs: 1,
            sub_palette_size: 0,
            greedy_slack,
            relaxed_epsilon: epsilon > EPSILON_ANALYSED_MAX,
        };
        if delta_prime >= delta_cap as u64 {
            params.sub_palette_size = Self::full_palette(epsilon, delta_cap);
        } else {
            params.subgraphs = (delta_cap as u64).div_ceil(delta_prime) as usize;
            params.sub_palette_size = ceil_tol((1.0 + epsilon) * (1.0 + epsilon) * root) as u32;
        }
        Ok(params)
    }

    /// The same parameters with partitioning switched off: one subgraph that
    /// Nibble colors with `ceil((1+eps) * delta_cap)` colors.
    pub fn unpartitioned(mut self) -> Self {
        self.subgraphs = 1;
        self.sub_palette_size = Self::full_palette(self.epsilon, self.delta_cap);
        self
    }

    fn full_palette(epsilon: f64, delta_cap: usize) -> u32 {
        ceil_tol((1.0 + epsilon) * delta_cap as f64) as u32
    }

    pub fn nibble_config(&self) -> NibbleConfig {
        NibbleConfig {
            rounds: self.rounds,
            seq_len: self.seq_len,
            palette_size: self.sub_palette_size,
        }
    }

    /// Size of the colour range reserved for all Nibble subgraphs together.
    pub fn nibble_color_span(&self) -> u64 {
        self.subgraphs as u64 * self.sub_palette_size as u64
    }

    /// The `(1 + 61 eps) Delta` color budget the analysis guarantees for
    /// very large Delta.
    pub fn color_bound(&self) -> f64 {
        (1.0 + 61.0 * self.epsilon) * self.delta_cap as f64
    }
}

/// What a single Nibble instance needs to know.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NibbleConfig {
    pub rounds: u32,
    pub seq_len: usize,
    pub palette_size: u32,
}

impl NibbleConfig {
    /// The round assigned to edges that never try to color themselves.
    pub fn idle_round(&self) -> u32 {
        self.rounds + 1
    }
}

/// The random choices attached to one incarnation of an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRandomness {
    /// 0-based subgraph index.
    pub subgraph: usize,
    /// Round in `1..=T+1`.
    pub round: u32,
    /// Colors in `1..=palette_size`.
    pub colors: Vec<u32>,
}

#[derive(Copy, Clone)]
#[repr(u64)]
enum Stream {
    Partition = 0x5041_5254,
    Round = 0x524f_554e,
    Colors = 0x434f_4c53,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn edge_key(seed: u64, e: Edge, incarnation: u32, stream: Stream) -> u64 {
    let mut k = splitmix64(seed);
    k = splitmix64(k ^ e.u() as u64);
    k = splitmix64(k ^ e.v() as u64);
    k = splitmix64(k ^ incarnation as u64);
    splitmix64(k ^ stream as u64)
}

fn stream_rng(seed: u64, e: Edge, incarnation: u32, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(edge_key(seed, e, incarnation, stream))
}

/// Draw from the capped geometric distribution on `1..=rounds+1`:
/// `Pr[i] = (1-eps)^(i-1) eps` for `i <= rounds`, the rest on `rounds+1`.
pub fn capped_geometric<R: Rng + ?Sized>(rng: &mut R, epsilon: f64, rounds: u32) -> u32 {
    for i in 1..=rounds {
        if rng.gen_bool(epsilon) {
            return i;
        }
    }
    rounds + 1
}

/// Seeded source of per-edge randomness plus the incarnation counters.
///
/// An edge's incarnation counts how many times it has been deleted; bumping it
/// gives the next insertion a fresh, independent draw.
#[derive(Debug, Clone)]
pub struct EdgeRng {
    seed: u64,
    incarnations: FxHashMap<Edge, u32>,
}

impl EdgeRng {
    pub fn new(seed: u64) -> Self {
        EdgeRng {
            seed,
            incarnations: FxHashMap::default(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn incarnation(&self, e: Edge) -> u32 {
        self.incarnations.get(&e).copied().unwrap_or(0)
    }

    pub fn fresh_incarnation(&mut self, e: Edge) {
        *self.incarnations.entry(e).or_insert(0) += 1;
    }

    pub fn sample_partition_index(&self, params: &Params, e: Edge) -> usize {
        self.partition_index_at(params, e, self.incarnation(e))
    }

    pub fn sample_round(&self, params: &Params, e: Edge) -> u32 {
        self.round_at(params, e, self.incarnation(e))
    }

    pub fn sample_color_sequence(&self, params: &Params, e: Edge) -> Vec<u32> {
        self.colors_at(params, e, self.incarnation(e))
    }

    pub fn edge_randomness(&self, params: &Params, e: Edge) -> EdgeRandomness {
        let inc = self.incarnation(e);
        EdgeRandomness {
            subgraph: self.partition_index_at(params, e, inc),
            round: self.round_at(params, e, inc),
            colors: self.colors_at(params, e, inc),
        }
    }

    pub fn partition_index_at(&self, params: &Params, e: Edge, incarnation: u32) -> usize {
        if params.subgraphs == 1 {
            return 0;
        }
        stream_rng(self.seed, e, incarnation, Stream::Partition).gen_range(0..params.subgraphs)
    }

    pub fn round_at(&self, params: &Params, e: Edge, incarnation: u32) -> u32 {
        let mut rng = stream_rng(self.seed, e, incarnation, Stream::Round);
        capped_geometric(&mut rng, params.epsilon, params.rounds)
    }

    pub fn colors_at(&self, params: &Params, e: Edge, incarnation: u32) -> Vec<u32> {
        let mut rng = stream_rng(self.seed, e, incarnation, Stream::Colors);
        let palette = params.sub_palette_size;
        (0..params.seq_len)
            .map(|_| rng.gen_range(1..=palette))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_half_epsilon_huge_delta() {
        let p = Params::derive(0.5, 1 << 30, 1.0).unwrap();
        assert_eq!(p.rounds, 1);
        assert_eq!(p.seq_len, 23);
        assert!((p.gamma - 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(p.delta_prime, 2);
        assert_eq!(p.subgraphs, 1 << 29);
        assert_eq!(p.sub_palette_size, 5);
        assert!(p.relaxed_epsilon);
    }

    #[test]
    fn params_tenth_epsilon() {
        let p = Params::derive(0.1, 1_000_000, 1.0).unwrap();
        assert_eq!(p.rounds, 23);
        assert_eq!(p.seq_len, 1843);
        assert!(!p.relaxed_epsilon);
    }

    #[test]
    fn params_desk_scale() {
        // frozen from an mpmath evaluation of the same formulas
        let cases = [
            (0.3, 64, 4, 108, 32, 2),
            (0.5, 8, 1, 23, 4, 3),
            (0.2, 64, 8, 322, 32, 2),
            (0.5, 2, 1, 23, 1, 3),
        ];
        for (eps, delta, t, k, eta, s) in cases {
            let p = Params::derive(eps, delta, 1.0).unwrap();
            assert_eq!(
                (p.rounds, p.seq_len, p.subgraphs, p.sub_palette_size),
                (t, k, eta, s),
                "eps={eps} delta={delta}"
            );
        }
    }

    #[test]
    fn invalid_params() {
        assert_eq!(
            Params::derive(0.0, 10, 1.0),
            Err(ParamError::InvalidEpsilon(0.0))
        );
        assert!(Params::derive(0.51, 10, 1.0).is_err());
        assert!(Params::derive(f64::NAN, 10, 1.0).is_err());
        assert_eq!(
            Params::derive(0.3, 0, 1.0),
            Err(ParamError::InvalidDegreeBound)
        );
        assert!(Params::derive(0.3, 10, 0.0).is_err());
        assert!(Params::derive(0.3, 10, 1.5).is_err());
    }

    #[test]
    fn unpartitioned_uses_full_palette() {
        let p = Params::derive(0.3, 64, 1.0).unwrap().unpartitioned();
        assert_eq!(p.subgraphs, 1);
        assert_eq!(p.sub_palette_size, 84); // ceil(1.3 * 64) = ceil(83.2)
    }

    #[test]
    fn draws_are_deterministic() {
        let p = Params::derive(0.3, 64, 1.0).unwrap();
        let a = EdgeRng::new(7);
        let b = EdgeRng::new(7);
        let e = Edge::of(3, 9);
        assert_eq!(a.edge_randomness(&p, e), b.edge_randomness(&p, e));
        assert_eq!(a.sample_round(&p, e), a.sample_round(&p, e));
    }

    #[test]
    fn single_color_palette() {
        let mut p = Params::derive(0.5, 8, 1.0).unwrap();
        p.sub_palette_size = 1;
        let rng = EdgeRng::new(1);
        assert!(rng
            .sample_color_sequence(&p, Edge::of(0, 1))
            .iter()
            .all(|&c| c == 1));
    }

    #[test]
    fn single_subgraph_always_zero() {
        let p = Params::derive(0.5, 2, 1.0).unwrap();
        assert_eq!(p.subgraphs, 1);
        let rng = EdgeRng::new(99);
        for v in 1..50 {
            assert_eq!(rng.sample_partition_index(&p, Edge::of(0, v)), 0);
        }
    }

    #[test]
    fn incarnation_bump_changes_draw() {
        let p = Params::derive(0.2, 64, 1.0).unwrap();
        let mut rng = EdgeRng::new(5);
        let e = Edge::of(1, 2);
        let before = rng.edge_randomness(&p, e);
        assert_eq!(before, rng.edge_randomness(&p, e));
        rng.fresh_incarnation(e);
        assert_eq!(rng.incarnation(e), 1);
        assert_ne!(before.colors, rng.edge_randomness(&p, e).colors);
    }

    #[test]
    fn seed_changes_draw() {
        let p = Params::derive(0.2, 64, 1.0).unwrap();
        let e = Edge::of(1, 2);
        assert_ne!(
            EdgeRng::new(1).sample_color_sequence(&p, e),
            EdgeRng::new(2).sample_color_sequence(&p, e)
        );
    }
}
