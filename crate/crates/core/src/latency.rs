//! Per-query latency accounting.
//!
//! Query latency is the sum of three phases: scoring (index lookups and dot
//! products), interpolation, and sorting. First-stage retrieval and
//! tokenization happen outside the measured pipeline.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::types::Query;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Scoring,
    Interpolation,
    Sorting,
}

/// Accumulates monotonic-clock time per phase for one query execution.
#[derive(Clone, Debug, Default)]
pub struct PhaseTimer {
    elapsed: [Duration; 3],
}

impl PhaseTimer {
    pub fn time<T>(&mut self, phase: Phase, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.elapsed[phase as usize] += start.elapsed();
        out
    }

    pub fn add(&mut self, phase: Phase, d: Duration) {
        self.elapsed[phase as usize] += d;
    }

    pub fn elapsed(&self, phase: Phase) -> Duration {
        self.elapsed[phase as usize]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryLatency {
    pub qid: String,
    pub scoring_ms: f64,
    pub interpolation_ms: f64,
    pub sorting_ms: f64,
    pub total_ms: f64,
    pub lookups: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LatencyReport {
    pub per_query: Vec<QueryLatency>,
    /// Averages over queries; `lookups` here is the sum over queries.
    pub mean: QueryLatency,
}

fn ms(d: Duration) -> f64 {
    d.as_nanos() as f64 / 1e6
}

/// Runs `pipeline` over every query for `warmup` discarded rounds and then
/// `rounds` measured rounds, averaging each query's phase times over the
/// measured rounds. Queries run sequentially. The pipeline returns the
/// number of forward-index lookups it made.
pub fn measure_latency<F>(queries: &[Query], warmup: usize, rounds: usize, mut pipeline: F) -> Result<LatencyReport>
where
    F: FnMut(&Query, &mut PhaseTimer) -> Result<usize>,
{
    if rounds == 0 {
        return Err(Error::InvalidConfig("at least one measured round is required".into()));
    }
    for _ in 0..warmup {
        for q in queries {
            pipeline(q, &mut PhaseTimer::default())?;
        }
    }
    let mut totals = vec![PhaseTimer::default(); queries.len()];
    let mut lookups = vec![0usize; queries.len()];
    for _ in 0..rounds {
        for (i, q) in queries.iter().enumerate() {
            let mut timer = PhaseTimer::default();
            lookups[i] = pipeline(q, &mut timer)?;
            for phase in [Phase::Scoring, Phase::Interpolation, Phase::Sorting] {
                totals[i].add(phase, timer.elapsed(phase));
            }
        }
    }

    let r = rounds as f64;
    let per_query: Vec<QueryLatency> = queries
        .iter()
        .zip(&totals)
        .zip(&lookups)
        .map(|((q, t), &lookups)| {
            let scoring_ms = ms(t.elapsed(Phase::Scoring)) / r;
            let interpolation_ms = ms(t.elapsed(Phase::Interpolation)) / r;
            let sorting_ms = ms(t.elapsed(Phase::Sorting)) / r;
            QueryLatency {
                qid: q.qid.clone(),
                scoring_ms,
                interpolation_ms,
                sorting_ms,
                total_ms: scoring_ms + interpolation_ms + sorting_ms,
                lookups,
            }
        })
        .collect();

    let n = per_query.len().max(1) as f64;
    let mean = QueryLatency {
        qid: "mean".into(),
        scoring_ms: per_query.iter().map(|q| q.scoring_ms).sum::<f64>() / n,
        interpolation_ms: per_query.iter().map(|q| q.interpolation_ms).sum::<f64>() / n,
        sorting_ms: per_query.iter().map(|q| q.sorting_ms).sum::<f64>() / n,
        total_ms: per_query.iter().map(|q| q.total_ms).sum::<f64>() / n,
        lookups: per_query.iter().map(|q| q.lookups).sum(),
    };
    Ok(LatencyReport { per_query, mean })
}

impl LatencyReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "qid,scoring_ms,interpolation_ms,sorting_ms,total_ms,lookups")?;
        for q in self.per_query.iter().chain(std::iter::once(&self.mean)) {
            writeln!(
                w,
                "{},{:.3},{:.3},{:.3},{:.3},{}",
                q.qid, q.scoring_ms, q.interpolation_ms, q.sorting_ms, q.total_ms, q.lookups
            )?;
        }
        Ok(())
    }

    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{:<12} {:>12} {:>12} {:>12} {:>12} {:>10}",
            "qid", "scoring", "interp", "sorting", "total(ms)", "lookups"
        )?;
        for q in self.per_query.iter().chain(std::iter::once(&self.mean)) {
            writeln!(
                w,
                "{:<12} {:>12.3} {:>12.3} {:>12.3} {:>12.3} {:>10}",
                q.qid, q.scoring_ms, q.interpolation_ms, q.sorting_ms, q.total_ms, q.lookups
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;
    use std::thread::sleep;

    use super::*;

    fn queries(n: usize) -> Vec<Query> {
        (0..n).map(|i| Query::new(format!("q{i}"), "").unwrap()).collect()
    }

    #[test]
    fn counts_warmup_and_measured_rounds() {
        let calls = Cell::new(0);
        let report = measure_latency(&queries(2), 1, 3, |_, _| {
            calls.set(calls.get() + 1);
            Ok(5)
        })
        .unwrap();
        assert_eq!(calls.get(), 2 * (1 + 3));
        assert_eq!(report.per_query.len(), 2);
        assert_eq!(report.mean.lookups, 10);
    }

    #[test]
    fn averages_over_measured_rounds_only() {
        // warmup round sleeps long; measured rounds are fast
        let round = Cell::new(0);
        let report = measure_latency(&queries(1), 1, 3, |_, t| {
            let d = if round.get() == 0 { 50 } else { 2 };
            round.set(round.get() + 1);
            t.time(Phase::Scoring, || sleep(Duration::from_millis(d)));
            Ok(0)
        })
        .unwrap();
        let s = report.per_query[0].scoring_ms;
        assert!((2.0..20.0).contains(&s), "{s}");
    }

    #[test]
    fn stub_phases_match_sleep_durations() {
        let report = measure_latency(&queries(2), 0, 2, |_, t| {
            t.time(Phase::Scoring, || sleep(Duration::from_millis(6)));
            t.time(Phase::Interpolation, || sleep(Duration::from_millis(3)));
            t.time(Phase::Sorting, || sleep(Duration::from_millis(1)));
            Ok(0)
        })
        .unwrap();
        let m = &report.mean;
        // sleep never returns early; allow generous scheduler jitter above
        assert!(m.scoring_ms >= 6.0 && m.scoring_ms < 30.0, "{m:?}");
        assert!(m.interpolation_ms >= 3.0 && m.interpolation_ms < 25.0, "{m:?}");
        assert!(m.sorting_ms >= 1.0 && m.sorting_ms < 20.0, "{m:?}");
        let sum = m.scoring_ms + m.interpolation_ms + m.sorting_ms;
        assert!((m.total_ms - sum).abs() < 1e-9);
    }

    #[test]
    fn rejects_zero_rounds() {
        assert!(measure_latency(&queries(1), 0, 0, |_, _| Ok(0)).is_err());
    }

    #[test]
    fn csv_layout() {
        let report = measure_latency(&queries(1), 0, 1, |_, _| Ok(3)).unwrap();
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "qid,scoring_ms,interpolation_ms,sorting_ms,total_ms,lookups");
        assert!(lines[1].starts_with("q0,") && lines[1].ends_with(",3"));
        assert!(lines[2].starts_with("mean,"));
    }
}
