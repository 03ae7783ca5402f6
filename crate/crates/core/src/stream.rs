//! Update-stream files and synthetic stream generators.
//!
//! Format:
//!
//! ```text
//! # comment
//! n 6 delta 3
//! + 0 1
//! - 0 1
//! ```

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::engine::UpdateOp;
use crate::graph::{DynGraph, Edge, GraphError, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Update {
    pub op: UpdateOp,
    pub edge: Edge,
}

impl Update {
    pub fn insert(e: Edge) -> Self {
        Update { op: UpdateOp::Insert, edge: e }
    }

    pub fn delete(e: Edge) -> Self {
        Update { op: UpdateOp::Delete, edge: e }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct StreamParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing header `n <n> delta <delta>`")]
    MissingHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("malformed update: {0}")]
    BadLine(String),
    #[error(transparent)]
    Illegal(#[from] GraphError),
}

/// A validated update sequence on `n` nodes with degree bound `delta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamFile {
    pub n: usize,
    pub delta: usize,
    pub updates: Vec<Update>,
}

impl StreamFile {
    /// Build a stream, checking every update against the live graph.
    pub fn new(n: usize, delta: usize, updates: Vec<Update>) -> Result<Self, StreamParseError> {
        let mut g = DynGraph::new(n, delta);
        for (k, u) in updates.iter().enumerate() {
            apply(&mut g, *u).map_err(|e| StreamParseError {
                line: k + 2,
                kind: e.into(),
            })?;
        }
        Ok(StreamFile { n, delta, updates })
    }

    pub fn parse(text: &str) -> Result<Self, StreamParseError> {
        let mut header = None;
        let mut g = DynGraph::new(0, 0);
        let mut updates = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let err = |kind| StreamParseError { line, kind };
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = body.split_whitespace().collect();
            if header.is_none() {
                let parsed = parse_header(&tokens).map_err(|m| err(ParseErrorKind::BadHeader(m)))?;
                header = Some(parsed);
                g = DynGraph::new(parsed.0, parsed.1);
                continue;
            }
            let update = parse_update(&tokens).map_err(|m| err(ParseErrorKind::BadLine(m)))?;
            apply(&mut g, update).map_err(|e| err(e.into()))?;
            updates.push(update);
        }
        let (n, delta) = header.ok_or(StreamParseError {
            line: text.lines().count().max(1),
            kind: ParseErrorKind::MissingHeader,
        })?;
        Ok(StreamFile { n, delta, updates })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + 12 * self.updates.len());
        writeln!(out, "n {} delta {}", self.n, self.delta).unwrap();
        for u in &self.updates {
            let sign = match u.op {
                UpdateOp::Insert => '+',
                UpdateOp::Delete => '-',
            };
            writeln!(out, "{sign} {} {}", u.edge.u(), u.edge.v()).unwrap();
        }
        out
    }

    /// Graph left after applying every update.
    pub fn final_graph(&self) -> DynGraph {
        let mut g = DynGraph::new(self.n, self.delta);
        for &u in &self.updates {
            apply(&mut g, u).expect("stream was validated");
        }
        g
    }

    /// Graph of all inserted edges, ignoring deletions.
    pub fn insertion_graph(&self) -> Result<DynGraph, GraphError> {
        let mut g = DynGraph::new(self.n, self.delta);
        for u in &self.updates {
            if u.op == UpdateOp::Insert && !g.contains(u.edge) {
                g.insert_edge(u.edge)?;
            }
        }
        Ok(g)
    }

    pub fn deletions(&self) -> usize {
        self.updates.iter().filter(|u| u.op == UpdateOp::Delete).count()
    }
}

impl fmt::Display for StreamFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for StreamFile {
    type Err = StreamParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

fn apply(g: &mut DynGraph, u: Update) -> Result<(), GraphError> {
    match u.op {
        UpdateOp::Insert => g.insert_edge(u.edge),
        UpdateOp::Delete => g.delete_edge(u.edge),
    }
}

fn parse_header(tokens: &[&str]) -> Result<(usize, usize), String> {
    match tokens {
        ["n", n, "delta", d] => {
            let n = n.parse().map_err(|_| format!("bad node count `{n}`"))?;
            let d = d.parse().map_err(|_| format!("bad degree bound `{d}`"))?;
            Ok((n, d))
        }
        _ => Err(tokens.join(" ")),
    }
}

fn parse_update(tokens: &[&str]) -> Result<Update, String> {
    let [sign, a, b] = tokens else {
        return Err(format!("expected `+|- u v`, got `{}`", tokens.join(" ")));
    };
    let node = |t: &str| t.parse::<NodeId>().map_err(|_| format!("bad node id `{t}`"));
    let e = Edge::new(node(a)?, node(b)?).map_err(|e| e.to_string())?;
    match *sign {
        "+" => Ok(Update::insert(e)),
        "-" => Ok(Update::delete(e)),
        s => Err(format!("unknown operation `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamKind {
    Random,
    Forest,
    Regularish,
    Churn,
}

impl FromStr for StreamKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(StreamKind::Random),
            "forest" => Ok(StreamKind::Forest),
            "regularish" => Ok(StreamKind::Regularish),
            "churn" => Ok(StreamKind::Churn),
            _ => Err(format!("unknown stream kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("need at least two nodes")]
    TooFewNodes,
    #[error("degree bound must be positive")]
    ZeroDelta,
    #[error("delete fraction {0} outside [0, 1)")]
    BadDeleteFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub kind: StreamKind,
    pub n: usize,
    pub delta: usize,
    pub count: usize,
    pub seed: u64,
    /// Probability that a churn step deletes; ignored by the other kinds.
    pub delete_fraction: f64,
}

impl GenSpec {
    pub fn new(kind: StreamKind, n: usize, delta: usize, count: usize, seed: u64) -> Self {
        GenSpec {
            kind,
            n,
            delta,
            count,
            seed,
            delete_fraction: 0.5,
        }
    }

    pub fn delete_fraction(mut self, f: f64) -> Self {
        self.delete_fraction = f;
        self
    }
}

/// Insert-only generators stop early when no legal edge is left.
pub fn generate(spec: &GenSpec) -> Result<StreamFile, GenError> {
    if spec.n < 2 {
        return Err(GenError::TooFewNodes);
    }
    if spec.delta == 0 {
        return Err(GenError::ZeroDelta);
    }
    if !(0.0..1.0).contains(&spec.delete_fraction) {
        return Err(GenError::BadDeleteFraction(spec.delete_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut live = LiveGraph::new(spec.n, spec.delta);
    let updates = match spec.kind {
        StreamKind::Random => {
            let mut out = Vec::with_capacity(spec.count);
            while out.len() < spec.count {
                match live.random_insert(&mut rng) {
                    Some(e) => out.push(Update::insert(e)),
                    None => break,
                }
            }
            out
        }
        StreamKind::Forest => forest(spec, &mut rng),
        StreamKind::Regularish => {
            let mut out = Vec::with_capacity(spec.count);
            while out.len() < spec.count {
                match live.spare_insert(&mut rng) {
                    Some(e) => out.push(Update::insert(e)),
                    None => break,
                }
            }
            out
        }
        StreamKind::Churn => {
            let mut out = Vec::with_capacity(spec.count);
            while out.len() < spec.count {
                let delete = !live.is_empty() && rng.gen_bool(spec.delete_fraction);
                let step = if delete {
                    Some(Update::delete(live.random_delete(&mut rng)))
                } else {
                    live.random_insert(&mut rng).map(Update::insert)
                };
                match step {
                    Some(u) => out.push(u),
                    None if live.is_empty() => break,
                    None => out.push(Update::delete(live.random_delete(&mut rng))),
                }
            }
            out
        }
    };
    Ok(StreamFile {
        n: spec.n,
        delta: spec.delta,
        updates,
    })
}

fn forest(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Vec<Update> {
    // random recursive tree on a shuffled node order, one new node per edge
    let mut order: Vec<NodeId> = (0..spec.n as NodeId).collect();
    order.shuffle(rng);
    let mut degree = vec![0usize; spec.n];
    let mut out = Vec::new();
    for k in 1..spec.n {
        if out.len() == spec.count {
            break;
        }
        let child = order[k];
        let open: Vec<NodeId> = order[..k]
            .iter()
            .copied()
            .filter(|&x| degree[x as usize] < spec.delta)
            .collect();
        let Some(&parent) = open.choose(rng) else {
            break;
        };
        degree[parent as usize] += 1;
        degree[child as usize] += 1;
        out.push(Update::insert(Edge::of(parent, child)));
    }
    out
}

// live edge list with O(1) uniform removal, plus the nodes with spare degree
struct LiveGraph {
    g: DynGraph,
    edges: Vec<Edge>,
    position: FxHashMap<Edge, usize>,
    spare: Vec<NodeId>,
    spare_pos: Vec<Option<usize>>,
}

impl LiveGraph {
    fn new(n: usize, delta: usize) -> Self {
        LiveGraph {
            g: DynGraph::new(n, delta),
            edges: Vec::new(),
            position: FxHashMap::default(),
            spare: (0..n as NodeId).collect(),
            spare_pos: (0..n).map(Some).collect(),
        }
    }

    fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn refresh_spare(&mut self, x: NodeId) {
        let has_room = self.g.degree(x) < self.g.degree_bound();
        match (has_room, self.spare_pos[x as usize]) {
            (true, None) => {
                self.spare_pos[x as usize] = Some(self.spare.len());
                self.spare.push(x);
            }
            (false, Some(p)) => {
                self.spare.swap_remove(p);
                if let Some(&moved) = self.spare.get(p) {
                    self.spare_pos[moved as usize] = Some(p);
                }
                self.spare_pos[x as usize] = None;
            }
            _ => {}
        }
    }

    fn add(&mut self, e: Edge) {
        self.g.insert_edge(e).expect("caller checked legality");
        self.position.insert(e, self.edges.len());
        self.edges.push(e);
        for x in e.endpoints() {
            self.refresh_spare(x);
        }
    }

    fn random_delete(&mut self, rng: &mut ChaCha8Rng) -> Edge {
        let p = rng.gen_range(0..self.edges.len());
        let e = self.edges.swap_remove(p);
        self.position.remove(&e);
        if let Some(&moved) = self.edges.get(p) {
            self.position.insert(moved, p);
        }
        self.g.delete_edge(e).expect("live edge");
        for x in e.endpoints() {
            self.refresh_spare(x);
        }
        e
    }

    fn legal(&self, a: NodeId, b: NodeId) -> Option<Edge> {
        let e = Edge::new(a, b).ok()?;
        let bound = self.g.degree_bound();
        (!self.g.contains(e) && self.g.degree(a) < bound && self.g.degree(b) < bound).then_some(e)
    }

    /// Uniform node pair, retried; `None` once attempts run out.
    fn random_insert(&mut self, rng: &mut ChaCha8Rng) -> Option<Edge> {
        let n = self.g.node_count() as NodeId;
        for _ in 0..64 {
            if let Some(e) = self.legal(rng.gen_range(0..n), rng.gen_range(0..n)) {
                self.add(e);
                return Some(e);
            }
        }
        self.spare_insert(rng)
    }

    /// Pair drawn among nodes below the degree bound, which drives degrees
    /// towards the bound.
    fn spare_insert(&mut self, rng: &mut ChaCha8Rng) -> Option<Edge> {
        if self.spare.len() < 2 {
            return None;
        }
        for _ in 0..64 {
            let a = *self.spare.choose(rng)?;
            let b = *self.spare.choose(rng)?;
            if let Some(e) = self.legal(a, b) {
                self.add(e);
                return Some(e);
            }
        }
        // dense leftovers: scan for any legal pair
        let mut nodes = self.spare.clone();
        nodes.sort_unstable();
        for (k, &a) in nodes.iter().enumerate() {
            for &b in &nodes[k + 1..] {
                if let Some(e) = self.legal(a, b) {
                    self.add(e);
                    return Some(e);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only() {
        let s = generate(&GenSpec::new(StreamKind::Random, 10, 3, 0, 1)).unwrap();
        assert_eq!(s.to_text(), "n 10 delta 3\n");
        assert_eq!(StreamFile::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn comments_and_blank_lines() {
        let s = StreamFile::parse("# hi\n\nn 3 delta 2\n+ 0 1\n# mid\n+ 2 1\n- 1 0\n").unwrap();
        assert_eq!(s.updates.len(), 3);
        assert_eq!(s.updates[1], Update::insert(Edge::of(1, 2)));
        assert_eq!(s.final_graph().edge_count(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = StreamFile::parse("n 4 delta 2\n+ 0 1\n+ 3\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(matches!(err.kind, ParseErrorKind::BadLine(_)));
    }

    #[test]
    fn illegal_updates_rejected() {
        let err = StreamFile::parse("n 4 delta 2\n- 0 1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Illegal(GraphError::MissingEdge(_))));
        let err = StreamFile::parse("n 4 delta 1\n+ 0 1\n+ 0 2\n").unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::Illegal(GraphError::DegreeBoundViolated { .. })
        ));
        let err = StreamFile::parse("+ 0 1\n").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::BadHeader(_)));
        assert_eq!(StreamFile::parse("# only\n").unwrap_err().kind, ParseErrorKind::MissingHeader);
    }

    #[test]
    fn forest_is_a_tree() {
        let s = generate(&GenSpec::new(StreamKind::Forest, 10, 3, 9, 4)).unwrap();
        assert_eq!(s.updates.len(), 9);
        // union-find acyclicity
        let mut parent: Vec<usize> = (0..10).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                p[x] = find(p, p[x]);
            }
            p[x]
        }
        for u in &s.updates {
            let (a, b) = (find(&mut parent, u.edge.u() as usize), find(&mut parent, u.edge.v() as usize));
            assert_ne!(a, b);
            parent[a] = b;
        }
    }

    #[test]
    fn churn_mixes_and_stays_legal() {
        let s = generate(&GenSpec::new(StreamKind::Churn, 100, 8, 4000, 9).delete_fraction(0.5)).unwrap();
        assert_eq!(s.updates.len(), 4000);
        let frac = s.deletions() as f64 / 4000.0;
        assert!((0.4..0.55).contains(&frac), "{frac}");
        StreamFile::parse(&s.to_text()).unwrap();
    }

    #[test]
    fn regularish_fills_degrees() {
        let s = generate(&GenSpec::new(StreamKind::Regularish, 40, 5, 1000, 2)).unwrap();
        let g = s.final_graph();
        // at most a handful of nodes can be left short
        let short = (0..40).filter(|&x| g.degree(x) < 5).count();
        assert!(short <= 6, "{short}");
    }

    #[test]
    fn bad_specs() {
        assert_eq!(
            generate(&GenSpec::new(StreamKind::Random, 1, 3, 1, 0)),
            Err(GenError::TooFewNodes)
        );
        assert_eq!(
            generate(&GenSpec::new(StreamKind::Churn, 5, 3, 1, 0).delete_fraction(1.0)),
            Err(GenError::BadDeleteFraction(1.0))
        );
    }
}
