//! Stream execution with metrics, one-shot static coloring and verification
//! runs. The `dyncolor` binary is a thin argument parser over this module.

use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{static_color, Engine, EngineError, UpdateReport};
use crate::oracle::{self, IndexDiff, OracleMismatch};
use crate::randomness::{ParamError, Params};
use crate::stream::{GenError, StreamFile, StreamParseError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Parse(#[from] StreamParseError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(Box<OracleFailure>),
    #[error("invariant violated after update {update}: {message}")]
    Invariant { update: usize, message: String },
}

impl HarnessError {
    /// 1 for bad input, 2 for a failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_)
            | HarnessError::Gen(_)
            | HarnessError::Params(_)
            | HarnessError::Io(_) => 1,
            HarnessError::Engine(_) | HarnessError::Oracle(_) | HarnessError::Invariant { .. } => 2,
        }
    }
}

/// Oracle disagreement with everything needed to reproduce it.
#[derive(Debug, Clone, Error)]
#[error("oracle check failed after update {update} (seed {seed}): {mismatch}")]
pub struct OracleFailure {
    /// 1-based index of the update that was just applied.
    pub update: usize,
    pub seed: u64,
    pub mismatch: OracleMismatch,
    /// Color indices that differ from the from-scratch run.
    pub index_diff: Vec<IndexDiff>,
}

impl OracleFailure {
    pub fn dump(&self) -> String {
        let mut out = format!("{self}\n");
        if self.index_diff.is_empty() {
            out.push_str("color indices agree\n");
        }
        for d in &self.index_diff {
            writeln!(
                out,
                "  {} subgraph {} round {}: engine l = {:?}, reference l = {}",
                d.edge, d.subgraph, d.round, d.engine, d.reference
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub epsilon: f64,
    pub seed: u64,
    pub greedy_slack: f64,
    pub no_partition: bool,
    /// Full oracle comparison after every k-th update.
    pub oracle_check: Option<usize>,
    /// Resample all randomness after every k-th update.
    pub resample_every: Option<usize>,
    /// Resample when `Delta(H)` exceeds this multiple of `eps * Delta`.
    pub resample_threshold: Option<f64>,
    /// Every audit after every update; implies `oracle_check = 1`.
    pub audit: bool,
}

impl RunOptions {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        RunOptions {
            epsilon,
            seed,
            greedy_slack: 1.0,
            no_partition: false,
            oracle_check: None,
            resample_every: None,
            resample_threshold: None,
            audit: false,
        }
    }

    pub fn params(&self, delta: usize) -> Result<Params, ParamError> {
        let p = Params::derive(self.epsilon, delta, self.greedy_slack)?;
        Ok(if self.no_partition { p.unpartitioned() } else { p })
    }
}

/// Parameters as echoed into the metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsEcho {
    pub epsilon: f64,
    pub delta: usize,
    pub greedy_slack: f64,
    pub rounds: u32,
    pub seq_len: usize,
    pub subgraphs: usize,
    pub sub_palette_size: u32,
}

impl ParamsEcho {
    fn new(p: &Params) -> Self {
        ParamsEcho {
            epsilon: p.epsilon,
            delta: p.delta_cap,
            greedy_slack: p.greedy_slack,
            rounds: p.rounds,
            seq_len: p.seq_len,
            subgraphs: p.subgraphs,
            sub_palette_size: p.sub_palette_size,
        }
    }
}

/// Wall-clock fields, kept apart so that everything else is reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub ns_per_update_mean: f64,
    pub ns_per_update_p50: u64,
    pub ns_per_update_p99: u64,
    pub total_ms: f64,
}

impl Timing {
    fn from_samples(mut ns: Vec<u64>) -> Self {
        if ns.is_empty() {
            return Timing::default();
        }
        let total: u64 = ns.iter().sum();
        ns.sort_unstable();
        let pick = |q: f64| ns[((ns.len() - 1) as f64 * q).round() as usize];
        Timing {
            ns_per_update_mean: total as f64 / ns.len() as f64,
            ns_per_update_p50: pick(0.5),
            ns_per_update_p99: pick(0.99),
            total_ms: total as f64 / 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsOutput {
    pub updates: usize,
    pub total_recourse: u64,
    pub mean_recourse: f64,
    pub max_recourse: u64,
    pub mean_dirty_tentative: f64,
    pub total_greedy_recolors: u64,
    pub h_inserts: u64,
    pub h_deletes: u64,
    pub colors_used_peak: usize,
    pub max_color_peak: u64,
    pub failed_peak: usize,
    pub h_max_degree_peak: usize,
    pub resamples: u64,
    pub oracle_checks: usize,
    pub final_edges: usize,
    pub seed: u64,
    pub params: ParamsEcho,
    pub timing: Timing,
}

impl MetricsOutput {
    pub const CSV_HEADER: &'static str = "seed,epsilon,delta,updates,total_recourse,mean_recourse,\
max_recourse,mean_dirty_tentative,colors_used_peak,failed_peak,h_max_degree_peak,resamples,\
ns_per_update_mean,ns_per_update_p50,ns_per_update_p99";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{},{:.6},{},{},{},{},{:.1},{},{}",
            self.seed,
            self.params.epsilon,
            self.params.delta,
            self.updates,
            self.total_recourse,
            self.mean_recourse,
            self.max_recourse,
            self.mean_dirty_tentative,
            self.colors_used_peak,
            self.failed_peak,
            self.h_max_degree_peak,
            self.resamples,
            self.timing.ns_per_update_mean,
            self.timing.ns_per_update_p50,
            self.timing.ns_per_update_p99,
        )
    }
}

#[derive(Default)]
struct Accumulator {
    updates: usize,
    total_recourse: u64,
    max_recourse: u64,
    dirty: u64,
    greedy_recolors: u64,
    h_inserts: u64,
    h_deletes: u64,
    colors_used_peak: usize,
    max_color_peak: u64,
    failed_peak: usize,
    h_max_degree_peak: usize,
    oracle_checks: usize,
    ns: Vec<u64>,
}

impl Accumulator {
    fn add(&mut self, r: &UpdateReport, engine: &Engine) {
        self.updates += 1;
        self.total_recourse += r.total_recourse as u64;
        self.max_recourse = self.max_recourse.max(r.total_recourse as u64);
        self.dirty += r.dirty_tentative as u64;
        self.greedy_recolors += r.greedy_recolors as u64;
        self.h_inserts += r.h_inserts as u64;
        self.h_deletes += r.h_deletes as u64;
        self.colors_used_peak = self.colors_used_peak.max(engine.colors_used());
        self.failed_peak = self.failed_peak.max(engine.failed_count());
        self.h_max_degree_peak = self
            .h_max_degree_peak
            .max(engine.greedy().graph().max_degree());
        self.ns.push(duration_ns(r.elapsed));
    }

    fn finish(self, engine: &Engine) -> MetricsOutput {
        let per = |x: u64| if self.updates == 0 { 0.0 } else { x as f64 / self.updates as f64 };
        MetricsOutput {
            updates: self.updates,
            total_recourse: self.total_recourse,
            mean_recourse: per(self.total_recourse),
            max_recourse: self.max_recourse,
            mean_dirty_tentative: per(self.dirty),
            total_greedy_recolors: self.greedy_recolors,
            h_inserts: self.h_inserts,
            h_deletes: self.h_deletes,
            colors_used_peak: self.colors_used_peak,
            max_color_peak: self.max_color_peak,
            failed_peak: self.failed_peak,
            h_max_degree_peak: self.h_max_degree_peak,
            resamples: engine.resamples(),
            oracle_checks: self.oracle_checks,
            final_edges: engine.graph().edge_count(),
            seed: engine.seed(),
            params: ParamsEcho::new(engine.params()),
            timing: Timing::from_samples(self.ns),
        }
    }
}

fn duration_ns(d: Duration) -> u64 {
    d.as_nanos().min(u64::MAX as u128) as u64
}

fn oracle_failure(engine: &Engine, update: usize, mismatch: OracleMismatch) -> HarnessError {
    HarnessError::Oracle(Box::new(OracleFailure {
        update,
        seed: engine.seed(),
        mismatch,
        index_diff: oracle::index_diff(engine),
    }))
}

// the audits only `verify` runs: internal indexes, failed-set scan, recourse
fn audit_update(
    engine: &Engine,
    update: usize,
    before: &crate::engine::Coloring,
    report: &UpdateReport,
) -> Result<(), HarnessError> {
    let fail = |message: String| HarnessError::Invariant { update, message };
    for (j, state) in engine.nibbles() {
        state.audit().map_err(|m| fail(format!("subgraph {j}: {m}")))?;
    }
    engine.greedy().audit().map_err(|m| fail(format!("greedy: {m}")))?;
    oracle::check_failed_sets(engine).map_err(|m| oracle_failure(engine, update, m))?;
    let after = engine.snapshot();
    let diff = oracle::recourse_diff(before, &after);
    if !report.resampled && diff != report.total_recourse {
        return Err(fail(format!(
            "reported recourse {} but {} colors changed",
            report.total_recourse, diff
        )));
    }
    Ok(())
}

/// Feed `stream` to a fresh engine and collect metrics.
pub fn run_stream(stream: &StreamFile, opts: &RunOptions) -> Result<MetricsOutput, HarnessError> {
    let params = opts.params(stream.delta)?;
    let mut engine =
        Engine::new(stream.n, params, opts.seed).with_resample_threshold(opts.resample_threshold);
    let check_every = if opts.audit { Some(1) } else { opts.oracle_check };
    let mut acc = Accumulator::default();
    let mut checker = oracle::Checker::new();
    for (k, u) in stream.updates.iter().enumerate() {
        let index = k + 1;
        let before = opts.audit.then(|| engine.snapshot());
        let mut report = engine.apply_update(u.op, u.edge)?;
        if opts.resample_every.is_some_and(|r| r > 0 && index % r == 0) {
            report.total_recourse += engine.resample_all()?;
            report.resampled = true;
        }
        acc.max_color_peak = acc.max_color_peak.max(engine.max_color());
        acc.add(&report, &engine);
        if let Some(before) = before {
            audit_update(&engine, index, &before, &report)?;
        }
        if check_every.is_some_and(|c| c > 0 && index % c == 0) {
            checker.check(&engine).map_err(|m| oracle_failure(&engine, index, m))?;
            acc.oracle_checks += 1;
        }
    }
    Ok(acc.finish(&engine))
}

/// Seed of trial `k` when running several trials from `seed`.
pub fn trial_seed(seed: u64, k: usize) -> u64 {
    if k == 0 {
        return seed;
    }
    let mut z = seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent runs with derived seeds, in parallel; results in trial order.
pub fn run_trials(
    stream: &StreamFile,
    opts: &RunOptions,
    trials: usize,
) -> Result<Vec<MetricsOutput>, HarnessError> {
    (0..trials.max(1))
        .into_par_iter()
        .map(|k| {
            let mut o = *opts;
            o.seed = trial_seed(opts.seed, k);
            run_stream(stream, &o)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticMetrics {
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub colors_used: usize,
    pub max_color: u64,
    pub failed: usize,
    pub h_max_degree: usize,
    pub proper: bool,
    /// `(1 + 61 eps) * Delta`; only guaranteed for astronomically large Delta.
    pub color_bound: f64,
    pub bound_ratio: f64,
    pub seed: u64,
    pub params: ParamsEcho,
    pub timing: Timing,
}

impl StaticMetrics {
    pub const CSV_HEADER: &'static str =
        "seed,epsilon,delta,edges,max_degree,colors_used,max_color,failed,h_max_degree,proper,color_bound,bound_ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3},{:.6}",
            self.seed,
            self.params.epsilon,
            self.params.delta,
            self.edges,
            self.max_degree,
            self.colors_used,
            self.max_color,
            self.failed,
            self.h_max_degree,
            self.proper,
            self.color_bound,
            self.bound_ratio
        )
    }
}

/// Color every inserted edge of `stream` at once.
pub fn run_static(stream: &StreamFile, opts: &RunOptions) -> Result<StaticMetrics, HarnessError> {
    let params = opts.params(stream.delta)?;
    let g = stream.insertion_graph().map_err(|e| StreamParseError {
        line: 0,
        kind: e.into(),
    })?;
    let start = std::time::Instant::now();
    let result = static_color(&g, &params, opts.seed);
    let elapsed = duration_ns(start.elapsed());
    let violations = oracle::verify_proper(&result.colors, &g);
    let missing = oracle::uncolored(&result.colors, &g);
    if let Some(&(a, b)) = violations.first() {
        return Err(HarnessError::Invariant {
            update: 0,
            message: format!("{a} and {b} share a color"),
        });
    }
    if let Some(e) = missing.first() {
        return Err(HarnessError::Invariant {
            update: 0,
            message: format!("{e} has no color"),
        });
    }
    let bound = params.color_bound();
    Ok(StaticMetrics {
        nodes: g.node_count(),
        edges: g.edge_count(),
        max_degree: g.max_degree(),
        colors_used: result.colors_used,
        max_color: result.max_color,
        failed: result.failed,
        h_max_degree: result.h_max_degree,
        proper: true,
        color_bound: bound,
        bound_ratio: result.colors_used as f64 / bound,
        seed: opts.seed,
        params: ParamsEcho::new(&params),
        timing: Timing::from_samples(if g.edge_count() == 0 { vec![] } else { vec![elapsed] }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub updates: usize,
    pub checks: usize,
    pub seed: u64,
    pub failure: Option<String>,
}

/// Run `stream` with every audit after every update.
pub fn run_verify(stream: &StreamFile, opts: &RunOptions) -> Result<VerifyReport, HarnessError> {
    let mut o = *opts;
    o.audit = true;
    let m = run_stream(stream, &o)?;
    Ok(VerifyReport {
        passed: true,
        updates: m.updates,
        checks: m.oracle_checks,
        seed: m.seed,
        failure: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{generate, GenSpec, StreamKind};

    #[test]
    fn empty_stream_zero_counters() {
        let s = StreamFile::parse("n 5 delta 2\n").unwrap();
        let m = run_stream(&s, &RunOptions::new(0.3, 1)).unwrap();
        assert_eq!(m.updates, 0);
        assert_eq!(m.total_recourse, 0);
        assert_eq!(m.mean_recourse, 0.0);
        assert_eq!(m.timing, Timing::default());
    }

    #[test]
    fn counters_match_reports() {
        let s = generate(&GenSpec::new(StreamKind::Churn, 40, 6, 300, 5)).unwrap();
        let m = run_stream(&s, &RunOptions::new(0.3, 2)).unwrap();
        assert_eq!(m.updates, 300);
        assert!(m.total_recourse >= 300);
        assert!((m.mean_recourse - m.total_recourse as f64 / 300.0).abs() < 1e-12);
        assert_eq!(m.final_edges, s.final_graph().edge_count());
    }

    #[test]
    fn verify_passes_and_counts_checks() {
        let s = generate(&GenSpec::new(StreamKind::Churn, 30, 8, 200, 6)).unwrap();
        let r = run_verify(&s, &RunOptions::new(0.5, 3)).unwrap();
        assert!(r.passed);
        assert_eq!(r.checks, 200);
    }

    #[test]
    fn static_single_edge() {
        let s = StreamFile::parse("n 2 delta 1\n+ 0 1\n").unwrap();
        let m = run_static(&s, &RunOptions::new(0.5, 0)).unwrap();
        assert_eq!(m.colors_used, 1);
        assert!(m.proper);
    }

    #[test]
    fn periodic_resample_keeps_oracle_agreement() {
        let s = generate(&GenSpec::new(StreamKind::Churn, 40, 8, 200, 8)).unwrap();
        let mut o = RunOptions::new(0.3, 4);
        o.resample_every = Some(50);
        o.oracle_check = Some(1);
        let m = run_stream(&s, &o).unwrap();
        assert_eq!(m.resamples, 4);
    }

    #[test]
    fn exit_codes() {
        let parse = HarnessError::Parse(StreamParseError::parse_fixture());
        assert_eq!(parse.exit_code(), 1);
        let inv = HarnessError::Invariant {
            update: 1,
            message: String::new(),
        };
        assert_eq!(inv.exit_code(), 2);
    }

    impl StreamParseError {
        fn parse_fixture() -> Self {
            StreamFile::parse("n 3 delta 1\n+ 3\n").unwrap_err()
        }
    }
}
