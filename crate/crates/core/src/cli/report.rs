//! Timed benchmark runs and their reports.

use std::time::Instant;

use serde::Serialize;

use super::bench::{BenchInstance, BenchName};
use super::oracle::{check, Verdict};
use crate::engine::{Engine, EngineError, EngineOptions, Stats, Strategy};

/// Timed runs per strategy.
pub const RUNS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceId {
    pub name: BenchName,
    pub size: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ReportStats {
    pub insertions: u64,
    pub invalidations: u64,
    pub propagations: u64,
    pub resumptions: u64,
}

impl From<Stats> for ReportStats {
    fn from(s: Stats) -> ReportStats {
        ReportStats {
            insertions: s.insertions,
            invalidations: s.invalidations,
            propagations: s.propagations,
            resumptions: s.consumer_resumptions,
        }
    }
}

/// One strategy's run of one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub instance: InstanceId,
    pub strategy: Strategy,
    /// Answers to the benchmark query.
    pub answers: usize,
    #[serde(rename = "match")]
    pub matched: bool,
    pub ms: [f64; RUNS],
    pub stats: ReportStats,
    #[serde(skip)]
    pub compared: usize,
    #[serde(skip)]
    pub mismatch: Option<String>,
}

impl BenchReport {
    pub fn mean_ms(&self) -> f64 {
        self.ms.iter().sum::<f64>() / RUNS as f64
    }

    /// One summary line; timings excluded.
    pub fn summary(&self) -> String {
        let s = &self.stats;
        format!(
            "{} size={} seed={} strategy={} answers={} match={} insertions={} invalidations={} propagations={} resumptions={}",
            self.instance.name,
            self.instance.size,
            self.instance.seed,
            self.strategy,
            self.answers,
            self.matched,
            s.insertions,
            s.invalidations,
            s.propagations,
            s.resumptions
        )
    }
}

/// Runs the instance once on a fresh engine, returning the engine so its
/// tables can be inspected.
pub fn run_once(inst: &BenchInstance, strategy: Strategy) -> Result<(Engine, usize, Stats), EngineError> {
    let mut engine = Engine::new(&inst.program(), EngineOptions::with_strategy(strategy))?;
    let solution = engine.solve(&inst.query())?;
    Ok((engine, solution.answers.len(), solution.stats))
}

/// Strategies a benchmark runs under when none are requested. Sum-mode
/// results depend on scheduling, so pagerank runs local only.
pub fn default_strategies(name: BenchName) -> Vec<Strategy> {
    if name.uses_sum() {
        vec![Strategy::Local]
    } else {
        vec![Strategy::Local, Strategy::Batched]
    }
}

/// Checks the first run against the oracle and times [`RUNS`] runs per
/// strategy. Batched is dropped for sum-mode benchmarks.
pub fn bench(inst: &BenchInstance, strategies: &[Strategy]) -> Result<Vec<BenchReport>, EngineError> {
    let mut reports = Vec::new();
    for &strategy in strategies {
        if inst.name.uses_sum() && strategy == Strategy::Batched {
            continue;
        }
        let mut ms = [0.0; RUNS];
        let mut first: Option<(usize, Stats, Verdict)> = None;
        for slot in &mut ms {
            let start = Instant::now();
            let (engine, answers, stats) = run_once(inst, strategy)?;
            *slot = start.elapsed().as_secs_f64() * 1e3;
            if first.is_none() {
                first = Some((answers, stats, check(inst, &engine)));
            }
        }
        let (answers, stats, verdict) = first.expect("at least one run");
        reports.push(BenchReport {
            instance: InstanceId { name: inst.name, size: inst.size, seed: inst.seed },
            strategy,
            answers,
            matched: verdict.matched,
            ms,
            stats: stats.into(),
            compared: verdict.compared,
            mismatch: verdict.mismatch,
        });
    }
    Ok(reports)
}
