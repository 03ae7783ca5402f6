//! Brute-force reference computations used as ground truth.
//!
//! Nothing here uses the palette indexes or the propagation code: palettes
//! are rebuilt from adjacency lists, conflicts are found by scanning
//! neighbours, and the per-edge randomness is regenerated from the seed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::engine::{Coloring, Engine};
use crate::graph::{DynGraph, Edge};
use crate::randomness::Params;

/// Output of the literal round-by-round Nibble run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReferenceNibble {
    pub rounds: BTreeMap<Edge, u32>,
    /// Color index per edge, `0` for uncolored.
    pub index: BTreeMap<Edge, u32>,
    pub tentative: BTreeMap<Edge, Option<u32>>,
    pub failed: BTreeSet<Edge>,
}

/// Run Nibble on `g` literally: for each round build every edge's palette as
/// an explicit set and scan its sequence.
pub fn reference_nibble<F>(g: &DynGraph, rounds: u32, palette_size: u32, mut draws: F) -> ReferenceNibble
where
    F: FnMut(Edge) -> (u32, Vec<u32>),
{
    let edges = g.sorted_edges();
    let mut out = ReferenceNibble::default();
    let mut sequences: BTreeMap<Edge, Vec<u32>> = BTreeMap::new();
    for &e in &edges {
        let (round, seq) = draws(e);
        out.rounds.insert(e, round);
        out.index.insert(e, 0);
        out.tentative.insert(e, None);
        sequences.insert(e, seq);
    }

    for round in 1..=rounds {
        let selected: Vec<Edge> = edges
            .iter()
            .copied()
            .filter(|e| out.rounds[e] == round)
            .collect();
        for &e in &selected {
            let mut palette: BTreeSet<u32> = (1..=palette_size).collect();
            for x in e.endpoints() {
                for f in g.incident(x) {
                    if out.rounds[&f] < round {
                        if let Some(c) = out.tentative[&f] {
                            palette.remove(&c);
                        }
                    }
                }
            }
            let seq = &sequences[&e];
            let pos = seq.iter().position(|c| palette.contains(c));
            let index = pos.map_or(0, |p| p as u32 + 1);
            out.index.insert(e, index);
            out.tentative.insert(e, pos.map(|p| seq[p]));
        }
        for &e in &selected {
            let mine = out.tentative[&e];
            let clash = mine.is_none()
                || e.endpoints().iter().any(|&x| {
                    g.incident(x)
                        .any(|f| f != e && out.rounds[&f] == round && out.tentative[&f] == mine)
                });
            if clash {
                out.failed.insert(e);
            }
        }
    }
    for &e in &edges {
        if out.rounds[&e] > rounds {
            out.failed.insert(e);
        }
    }
    out
}

/// Edges that are uncolored or share their tentative color with a
/// same-round neighbour.
pub fn brute_force_failed_set(
    tentative: &BTreeMap<Edge, Option<u32>>,
    rounds: &BTreeMap<Edge, u32>,
    g: &DynGraph,
) -> BTreeSet<Edge> {
    let mut failed = BTreeSet::new();
    for e in g.edges() {
        let mine = tentative[&e];
        if mine.is_none() {
            failed.insert(e);
            continue;
        }
        for x in e.endpoints() {
            for f in g.incident(x) {
                if f != e && rounds[&f] == rounds[&e] && tentative[&f] == mine {
                    failed.insert(e);
                }
            }
        }
    }
    failed
}

/// Pairs of adjacent edges with the same color. Each pair is reported once,
/// smaller edge first.
pub fn verify_proper(coloring: &Coloring, g: &DynGraph) -> Vec<(Edge, Edge)> {
    let mut bad = BTreeSet::new();
    let mut around: Vec<(u64, Edge)> = Vec::new();
    for x in 0..g.node_count() as u32 {
        around.clear();
        around.extend(g.incident(x).filter_map(|e| coloring.get(&e).map(|&c| (c, e))));
        around.sort_unstable();
        for (k, &(c, a)) in around.iter().enumerate() {
            for &(d, b) in &around[k + 1..] {
                if d != c {
                    break;
                }
                bad.insert((a.min(b), a.max(b)));
            }
        }
    }
    bad.into_iter().collect()
}

/// Live edges of `g` that have no color.
pub fn uncolored(coloring: &Coloring, g: &DynGraph) -> Vec<Edge> {
    g.sorted_edges()
        .into_iter()
        .filter(|e| !coloring.contains_key(e))
        .collect()
}

/// Number of edges whose color differs, absent edges counting as uncolored.
pub fn recourse_diff(before: &Coloring, after: &Coloring) -> usize {
    let keys: BTreeSet<&Edge> = before.keys().chain(after.keys()).collect();
    keys.into_iter()
        .filter(|e| before.get(e) != after.get(e))
        .count()
}

/// First disagreement between an engine and the from-scratch recomputation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleMismatch {
    pub what: &'static str,
    pub subgraph: Option<usize>,
    pub edge: Option<Edge>,
    pub round: Option<u32>,
    pub detail: String,
}

impl fmt::Display for OracleMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mismatch", self.what)?;
        if let Some(j) = self.subgraph {
            write!(f, " in subgraph {j}")?;
        }
        if let Some(e) = self.edge {
            write!(f, " at edge {e}")?;
        }
        if let Some(r) = self.round {
            write!(f, " (round {r})")?;
        }
        write!(f, ": {}", self.detail)
    }
}

impl std::error::Error for OracleMismatch {}

impl OracleMismatch {
    fn new(what: &'static str, detail: impl Into<String>) -> Self {
        OracleMismatch {
            what,
            subgraph: None,
            edge: None,
            round: None,
            detail: detail.into(),
        }
    }
}

/// Rebuild every subgraph's Nibble output from scratch and compare it, the
/// routing, the failed-edge graph and the final coloring with `engine`.
pub fn check_engine(engine: &Engine) -> Result<(), OracleMismatch> {
    Checker::new().check(engine)
}

type Draw = (u32, Vec<u32>);

/// [`check_engine`] for repeated use on one evolving engine.
///
/// The reference run of a subgraph is a pure function of its edges and their
/// incarnations, so it is reused while that input is unchanged; draws are
/// cached per `(edge, incarnation)`. Every comparison still runs in full.
#[derive(Debug, Default)]
pub struct Checker {
    routes: HashMap<(Edge, u32), usize>,
    draws: HashMap<(Edge, u32), Draw>,
    reference: HashMap<usize, (Vec<(Edge, u32)>, ReferenceNibble)>,
    /// Subgraph reference runs actually recomputed.
    pub recomputed: usize,
}

impl Checker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, engine: &Engine) -> Result<(), OracleMismatch> {
        let params: &Params = engine.params();
        let rng = engine.rng();
        let g = engine.graph();

        // routing, recomputed from the seed
        let mut groups: BTreeMap<usize, Vec<(Edge, u32)>> = BTreeMap::new();
        for e in g.sorted_edges() {
            let inc = rng.incarnation(e);
            let expect = *self
                .routes
                .entry((e, inc))
                .or_insert_with(|| rng.partition_index_at(params, e, inc));
            let actual = engine.partition().member(e);
            if actual != Some(expect) {
                let mut m = OracleMismatch::new(
                    "routing",
                    format!("expected subgraph {expect}, engine has {actual:?}"),
                );
                m.edge = Some(e);
                return Err(m);
            }
            groups.entry(expect).or_default().push((e, inc));
        }
        if engine.partition().len() != g.edge_count() {
            return Err(OracleMismatch::new("routing", "partition holds dead edges"));
        }
        self.reference.retain(|j, _| groups.contains_key(j));

        let mut all_failed = BTreeSet::new();
        for (&j, key) in &groups {
            let fresh = self.reference.get(&j).is_none_or(|(k, _)| k != key);
            if fresh {
                let sub = DynGraph::from_edges(
                    g.node_count(),
                    g.degree_bound(),
                    key.iter().map(|&(e, _)| e),
                )
                .expect("subset of a valid graph");
                let draws = &mut self.draws;
                let reference = reference_nibble(&sub, params.rounds, params.sub_palette_size, |e| {
                    let inc = rng.incarnation(e);
                    draws
                        .entry((e, inc))
                        .or_insert_with(|| (rng.round_at(params, e, inc), rng.colors_at(params, e, inc)))
                        .clone()
                });
                self.reference.insert(j, (key.clone(), reference));
                self.recomputed += 1;
            }
            let reference = &self.reference[&j].1;
            compare_subgraph(engine, j, key, reference)?;
            all_failed.extend(reference.failed.iter().copied());
        }
        if engine.nibbles().any(|(j, s)| !groups.contains_key(&j) && !s.is_empty()) {
            return Err(OracleMismatch::new("nibble", "empty subgraph still stores edges"));
        }
        check_final(engine, &all_failed)
    }
}

fn compare_subgraph(
    engine: &Engine,
    j: usize,
    edges: &[(Edge, u32)],
    reference: &ReferenceNibble,
) -> Result<(), OracleMismatch> {
    let Some(state) = engine.nibble(j) else {
        let mut m = OracleMismatch::new("nibble", "subgraph has no state");
        m.subgraph = Some(j);
        return Err(m);
    };
    if state.len() != edges.len() {
        let mut m = OracleMismatch::new(
            "nibble",
            format!("{} stored edges, {} live", state.len(), edges.len()),
        );
        m.subgraph = Some(j);
        return Err(m);
    }
    for &(e, _) in edges {
        let actual = state.color_index(e).ok();
        let expect = reference.index[&e];
        if actual != Some(expect) {
            return Err(OracleMismatch {
                what: "color index",
                subgraph: Some(j),
                edge: Some(e),
                round: Some(reference.rounds[&e]),
                detail: format!("reference l = {expect}, engine l = {actual:?}"),
            });
        }
    }
    if state.failed_len() != reference.failed.len()
        || state.failed().any(|e| !reference.failed.contains(&e))
    {
        let maintained: BTreeSet<Edge> = state.failed().collect();
        let e = maintained
            .symmetric_difference(&reference.failed)
            .next()
            .copied();
        return Err(OracleMismatch {
            what: "failed set",
            subgraph: Some(j),
            edge: e,
            round: e.map(|e| reference.rounds[&e]),
            detail: format!(
                "reference |F| = {}, engine |F| = {}",
                reference.failed.len(),
                maintained.len()
            ),
        });
    }
    Ok(())
}

// H, completeness, properness and the disjoint color ranges
fn check_final(engine: &Engine, all_failed: &BTreeSet<Edge>) -> Result<(), OracleMismatch> {
    let params = engine.params();
    let g = engine.graph();
    let h: BTreeSet<Edge> = engine.greedy().graph().edges().collect();
    if &h != all_failed {
        let e = h.symmetric_difference(all_failed).next().copied();
        let mut m = OracleMismatch::new(
            "failed-edge graph",
            format!("|H| = {}, |union F| = {}", h.len(), all_failed.len()),
        );
        m.edge = e;
        return Err(m);
    }

    let coloring = engine.snapshot();
    if let Some(&e) = uncolored(&coloring, g).first() {
        let mut m = OracleMismatch::new("coloring", "live edge without a color");
        m.edge = Some(e);
        return Err(m);
    }
    if coloring.len() != g.edge_count() {
        return Err(OracleMismatch::new("coloring", "colors stored for dead edges"));
    }
    if let Some(&(a, b)) = verify_proper(&coloring, g).first() {
        let mut m = OracleMismatch::new("properness", format!("{a} and {b} share a color"));
        m.edge = Some(a);
        return Err(m);
    }
    let span = params.nibble_color_span();
    let width = params.sub_palette_size as u64;
    for (&e, &c) in &coloring {
        let ok = if all_failed.contains(&e) {
            c > span
        } else {
            let j = engine.partition().member(e).expect("checked above") as u64;
            c > j * width && c <= (j + 1) * width
        };
        if !ok {
            let mut m = OracleMismatch::new("color range", format!("color {c}"));
            m.edge = Some(e);
            return Err(m);
        }
    }
    Ok(())
}

/// One edge whose maintained color index disagrees with the reference.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct IndexDiff {
    pub edge: Edge,
    pub subgraph: usize,
    pub round: u32,
    pub engine: Option<u32>,
    pub reference: u32,
}

/// Every color-index disagreement between `engine` and a from-scratch run,
/// grouped by the engine's own routing.
pub fn index_diff(engine: &Engine) -> Vec<IndexDiff> {
    let params = engine.params();
    let rng = engine.rng();
    let g = engine.graph();
    let mut out = Vec::new();
    for (j, sub) in engine.partition().subgraphs() {
        let reference = reference_nibble(sub, params.rounds, params.sub_palette_size, |e| {
            let inc = rng.incarnation(e);
            (rng.round_at(params, e, inc), rng.colors_at(params, e, inc))
        });
        for (&e, &l) in &reference.index {
            let actual = engine.nibble(j).and_then(|s| s.color_index(e).ok());
            if actual != Some(l) && g.contains(e) {
                out.push(IndexDiff {
                    edge: e,
                    subgraph: j,
                    round: reference.rounds[&e],
                    engine: actual,
                    reference: l,
                });
            }
        }
    }
    out
}

/// Compare every subgraph's maintained failed set with a neighbour scan over
/// the engine's own tentative colors.
pub fn check_failed_sets(engine: &Engine) -> Result<(), OracleMismatch> {
    for (j, state) in engine.nibbles() {
        let Some(sub) = engine.partition().subgraph(j) else {
            continue;
        };
        let mut tentative = BTreeMap::new();
        let mut rounds = BTreeMap::new();
        for e in sub.edges() {
            tentative.insert(e, state.color_query(e).ok().flatten());
            rounds.insert(e, state.round(e).unwrap_or(0));
        }
        let expect = brute_force_failed_set(&tentative, &rounds, sub);
        let actual: BTreeSet<Edge> = state.failed().collect();
        if expect != actual {
            let mut m = OracleMismatch::new(
                "failed set",
                format!("scan |F| = {}, maintained |F| = {}", expect.len(), actual.len()),
            );
            m.subgraph = Some(j);
            m.edge = expect.symmetric_difference(&actual).next().copied();
            return Err(m);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> DynGraph {
        DynGraph::from_edges(3, 2, [Edge::of(0, 1), Edge::of(1, 2), Edge::of(0, 2)]).unwrap()
    }

    #[test]
    fn proper_triangle() {
        let g = triangle();
        let c: Coloring = [(Edge::of(0, 1), 1), (Edge::of(1, 2), 2), (Edge::of(0, 2), 3)]
            .into_iter()
            .collect();
        assert!(verify_proper(&c, &g).is_empty());
    }

    #[test]
    fn improper_triangle() {
        let g = triangle();
        let c: Coloring = [(Edge::of(0, 1), 1), (Edge::of(1, 2), 1), (Edge::of(0, 2), 2)]
            .into_iter()
            .collect();
        assert_eq!(verify_proper(&c, &g), vec![(Edge::of(0, 1), Edge::of(1, 2))]);
    }

    #[test]
    fn reference_on_trivial_graphs() {
        let empty = DynGraph::new(4, 2);
        let r = reference_nibble(&empty, 3, 4, |_| unreachable!());
        assert!(r.index.is_empty() && r.failed.is_empty());

        let single = DynGraph::from_edges(2, 1, [Edge::of(0, 1)]).unwrap();
        let r = reference_nibble(&single, 3, 4, |_| (2, vec![4, 1]));
        assert_eq!(r.index[&Edge::of(0, 1)], 1);
        assert!(r.failed.is_empty());
    }

    #[test]
    fn brute_failed_fixtures() {
        let g = DynGraph::from_edges(4, 2, [Edge::of(0, 1), Edge::of(1, 2), Edge::of(2, 3)]).unwrap();
        let rounds: BTreeMap<Edge, u32> = g.edges().map(|e| (e, 1)).collect();
        let matching: BTreeMap<Edge, Option<u32>> = [
            (Edge::of(0, 1), Some(1)),
            (Edge::of(1, 2), Some(2)),
            (Edge::of(2, 3), Some(1)),
        ]
        .into_iter()
        .collect();
        assert!(brute_force_failed_set(&matching, &rounds, &g).is_empty());
        let clash: BTreeMap<Edge, Option<u32>> = [
            (Edge::of(0, 1), Some(1)),
            (Edge::of(1, 2), Some(1)),
            (Edge::of(2, 3), None),
        ]
        .into_iter()
        .collect();
        assert_eq!(brute_force_failed_set(&clash, &rounds, &g).len(), 3);
    }

    #[test]
    fn recourse_diff_counts() {
        let a: Coloring = [(Edge::of(0, 1), 1)].into_iter().collect();
        assert_eq!(recourse_diff(&a, &a), 0);
        let mut b = a.clone();
        b.insert(Edge::of(1, 2), 4);
        assert_eq!(recourse_diff(&a, &b), 1);
        assert_eq!(recourse_diff(&b, &Coloring::new()), 2);
    }
}
