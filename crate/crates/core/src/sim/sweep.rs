use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::compare::ratio;
use super::{classify, run, AfterLimit, Horizon, SchedulabilityClass, SchedulerConfig, SimConfig, SimMetrics};
use crate::dispatch::{CostWeights, StrategyKind};
use crate::error::{Error, Result};
use crate::model::{expected_interrupt_rate, Mapping, Rational, TaskSet, Time};

/// A scenario to be re-run at several period factors.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub task_set: TaskSet,
    pub mapping: Mapping,
    pub strategies: Vec<StrategyKind>,
    pub weights: CostWeights,
    pub scheduler: SchedulerConfig,
    /// A fixed horizon is scaled with the factor.
    pub horizon: Horizon,
    pub capacity_per_unit: u64,
    pub work_per_cost_unit: u64,
    pub overhead_as_time: bool,
    pub after_limit: AfterLimit,
    /// Scale timer periods with the task periods. Off for setups whose
    /// timer period is fixed.
    pub scale_timers: bool,
    /// Multiply every WCET by the factor too.
    pub scale_workload: bool,
}

impl SweepConfig {
    fn at(&self, factor: u64) -> Result<(SimConfig, Mapping)> {
        let mut tasks = self.task_set.scaled(factor)?;
        if self.scale_workload {
            let t = tasks
                .tasks()
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t.wcet = t.wcet.checked_mul(factor).ok_or_else(|| Error::config("scaled WCET overflows"))?;
                    Ok(t)
                })
                .collect::<Result<Vec<_>>>()?;
            tasks = TaskSet::new(t)?;
        }
        let mapping = if self.scale_timers { self.mapping.scaled(factor)? } else { self.mapping.clone() };
        mapping.validate(&tasks)?;
        let horizon = match self.horizon {
            Horizon::Fixed(h) => {
                Horizon::Fixed(h.checked_mul(factor).ok_or_else(|| Error::config("scaled horizon overflows"))?)
            }
            Horizon::UntilRetired => Horizon::UntilRetired,
        };
        let mut cfg = SimConfig::new(tasks, mapping.clone(), StrategyKind::Baseline, horizon);
        cfg.weights = self.weights;
        cfg.scheduler = self.scheduler;
        cfg.capacity_per_unit = self.capacity_per_unit;
        cfg.work_per_cost_unit = self.work_per_cost_unit;
        cfg.overhead_as_time = self.overhead_as_time;
        cfg.after_limit = self.after_limit;
        Ok((cfg, mapping))
    }
}

/// One strategy at one period factor. Metric fields are empty on error rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub factor: u64,
    /// Expected interrupt rate of the scaled mapping over that of one timer
    /// at period `factor`; independent of the factor when timers scale.
    pub normalized_rate: Option<f64>,
    /// Expected interrupt rate of the scaled mapping relative to the
    /// period-1 baseline timer.
    pub rate_vs_baseline: Option<f64>,
    pub strategy: StrategyKind,
    pub total_time: Option<Time>,
    pub interrupts: Option<u64>,
    pub overhead_cost: Option<u64>,
    pub overhead_fraction: Option<f64>,
    /// Baseline overhead cost divided by this strategy's at the same factor.
    pub reduction: Option<f64>,
    pub deadline_misses: Option<u64>,
    pub schedulable_class: Option<SchedulabilityClass>,
    pub peak_reduction: Option<f64>,
    pub mean_reduction: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub peak_reduction: Option<f64>,
    /// Geometric mean over factors not classified not-schedulable.
    pub mean_reduction: Option<f64>,
    pub factors_counted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<StrategySummary>,
    /// `(strategy, factor)`: schedulable at the previous factor, misses here.
    pub monotonicity_violations: Vec<(StrategyKind, u64)>,
}

/// Re-runs every strategy at each period factor. Factors are simulated on
/// separate threads; the row order follows `factors`, then `strategies`.
pub fn period_factor_sweep(config: &SweepConfig, factors: &[u64]) -> Result<SweepTable> {
    if factors.is_empty() {
        return Err(Error::usage("sweep needs at least one period factor"));
    }
    if factors.contains(&0) {
        return Err(Error::usage("period factors must be >= 1"));
    }
    if config.strategies.is_empty() {
        return Err(Error::usage("sweep needs at least one strategy"));
    }
    let per_factor: Vec<Vec<SweepRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = factors.iter().map(|&p| scope.spawn(move || sweep_factor(config, p))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut rows: Vec<SweepRow> = per_factor.into_iter().flatten().collect();
    let summary = summarize(&rows);
    for row in &mut rows {
        if let Some(s) = summary.iter().find(|s| s.strategy == row.strategy) {
            row.peak_reduction = s.peak_reduction;
            row.mean_reduction = s.mean_reduction;
        }
    }
    let monotonicity_violations = monotonicity_violations(&rows, &config.strategies);
    Ok(SweepTable { rows, summary, monotonicity_violations })
}

fn sweep_factor(config: &SweepConfig, factor: u64) -> Vec<SweepRow> {
    let error_row = |strategy: StrategyKind, msg: String| SweepRow {
        factor,
        normalized_rate: None,
        rate_vs_baseline: None,
        strategy,
        total_time: None,
        interrupts: None,
        overhead_cost: None,
        overhead_fraction: None,
        reduction: None,
        deadline_misses: None,
        schedulable_class: None,
        peak_reduction: None,
        mean_reduction: None,
        error: Some(msg),
    };
    let (base, mapping) = match config.at(factor) {
        Ok(v) => v,
        Err(e) => return config.strategies.iter().map(|&s| error_row(s, e.to_string())).collect(),
    };
    let single = Rational::unit(factor);
    let results: Vec<(StrategyKind, Result<SimMetrics>)> =
        config.strategies.iter().map(|&s| (s, run(&base.with_strategy(s)))).collect();
    let class = classify(
        &results.iter().filter_map(|(s, m)| m.as_ref().ok().map(|m| (*s, m.schedulable()))).collect::<Vec<_>>(),
    );
    let baseline_cost = results
        .iter()
        .find(|(s, m)| *s == StrategyKind::Baseline && m.is_ok())
        .and_then(|(_, m)| m.as_ref().ok().map(|m| m.overhead_cost));
    results
        .into_iter()
        .map(|(strategy, m)| {
            let m = match m {
                Ok(m) => m,
                Err(e) => return error_row(strategy, e.to_string()),
            };
            // The baseline always runs on one period-1 timer.
            let rate = if strategy == StrategyKind::Baseline { Rational::ONE } else { expected_interrupt_rate(&mapping) };
            SweepRow {
                factor,
                normalized_rate: Some((rate / single).to_f64()),
                rate_vs_baseline: Some(rate.to_f64()),
                strategy,
                total_time: Some(m.total_time),
                interrupts: Some(m.total_interrupts),
                overhead_cost: Some(m.overhead_cost),
                overhead_fraction: Some(m.overhead_fraction()),
                reduction: baseline_cost.map(|b| ratio(b, m.overhead_cost)),
                deadline_misses: Some(m.misses.len() as u64),
                schedulable_class: Some(class),
                peak_reduction: None,
                mean_reduction: None,
                error: None,
            }
        })
        .collect()
}

/// Peak and geometric-mean reduction per non-baseline strategy. Only
/// factors where some method is schedulable count.
pub fn summarize(rows: &[SweepRow]) -> Vec<StrategySummary> {
    let mut by_strategy: BTreeMap<StrategyKind, Vec<f64>> = BTreeMap::new();
    for row in rows {
        if row.strategy == StrategyKind::Baseline {
            continue;
        }
        let entry = by_strategy.entry(row.strategy).or_default();
        let counted = row.error.is_none()
            && row.schedulable_class.is_some_and(|c| c != SchedulabilityClass::NotSchedulable);
        if let (true, Some(r)) = (counted, row.reduction) {
            entry.push(r);
        }
    }
    by_strategy
        .into_iter()
        .map(|(strategy, values)| {
            let peak = values.iter().copied().fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            let mean = (!values.is_empty())
                .then(|| (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp());
            StrategySummary { strategy, peak_reduction: peak, mean_reduction: mean, factors_counted: values.len() }
        })
        .collect()
}

fn monotonicity_violations(rows: &[SweepRow], strategies: &[StrategyKind]) -> Vec<(StrategyKind, u64)> {
    let mut out = Vec::new();
    for &s in strategies {
        let mut series: Vec<(u64, bool)> = rows
            .iter()
            .filter(|r| r.strategy == s)
            .filter_map(|r| r.deadline_misses.map(|m| (r.factor, m == 0)))
            .collect();
        series.sort();
        for w in series.windows(2) {
            if w[0].1 && !w[1].1 {
                out.push((s, w[1].0));
            }
        }
    }
    out
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_sweep_csv(out, &self.rows)
    }

    /// Peak and mean reduction per strategy as aligned text.
    pub fn summary_text(&self) -> String {
        summary_text(&self.summary)
    }
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?)
}

pub fn summary_text(summary: &[StrategySummary]) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}x"));
    let mut out = String::new();
    writeln!(out, "{:<18} {:>10} {:>10} {:>8}", "strategy", "peak", "mean", "factors").unwrap();
    for s in summary {
        writeln!(
            out,
            "{:<18} {:>10} {:>10} {:>8}",
            s.strategy.name(),
            fmt(s.peak_reduction),
            fmt(s.mean_reduction),
            s.factors_counted
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GenerationSpec, generate_task_set};
    use crate::optimizer::{solve_exact, OptimizationProblem};

    fn paper_like() -> SweepConfig {
        let spec = GenerationSpec {
            base_periods: vec![3, 5, 7, 11],
            factors: (1..=10).collect(),
            n_tasks: 20,
            period_factor: 1,
            seed: 7,
            wcet: 1,
            harmonic: false,
            releases: 5,
        };
        let tasks = generate_task_set(&spec).unwrap();
        let opt = solve_exact(&OptimizationProblem::from_task_set(&tasks, 4).unwrap()).unwrap();
        SweepConfig {
            task_set: tasks,
            mapping: opt.mapping,
            strategies: vec![StrategyKind::Baseline, StrategyKind::Chronos, StrategyKind::ChronosConst],
            weights: CostWeights::default(),
            scheduler: SchedulerConfig::default(),
            horizon: Horizon::UntilRetired,
            capacity_per_unit: 50,
            work_per_cost_unit: 1,
            overhead_as_time: true,
            after_limit: AfterLimit::Retire,
            scale_timers: true,
            scale_workload: false,
        }
    }

    #[test]
    fn normalized_rate_is_factor_independent() {
        let cfg = paper_like();
        let table = period_factor_sweep(&cfg, &[1, 2, 3]).unwrap();
        assert_eq!(table.rows.len(), 9);
        let expected = expected_interrupt_rate(&cfg.mapping).to_f64();
        for row in table.rows.iter().filter(|r| r.strategy != StrategyKind::Baseline) {
            assert!((row.normalized_rate.unwrap() - expected).abs() < 1e-12);
            assert!((row.rate_vs_baseline.unwrap() - expected / row.factor as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn baseline_rows_report_the_period_one_timer() {
        let table = period_factor_sweep(&paper_like(), &[1, 3]).unwrap();
        for row in table.rows.iter().filter(|r| r.strategy == StrategyKind::Baseline) {
            assert_eq!(row.rate_vs_baseline, Some(1.0));
            assert_eq!(row.normalized_rate, Some(row.factor as f64));
        }
    }

    #[test]
    fn failing_strategy_leaves_other_rows() {
        let mut cfg = paper_like();
        cfg.strategies.push(StrategyKind::ChronosHarmonic);
        let table = period_factor_sweep(&cfg, &[1]).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert!(table.rows[..3].iter().all(|r| r.error.is_none()));
        assert!(table.rows[3].error.as_deref().unwrap().contains("harmonic"));
    }

    #[test]
    fn single_factor_gives_one_row_per_strategy() {
        let table = period_factor_sweep(&paper_like(), &[4]).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.summary.len(), 2);
        assert!(table.rows.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn overflow_becomes_error_rows() {
        let table = period_factor_sweep(&paper_like(), &[1, u64::MAX / 2]).unwrap();
        assert!(table.rows[..3].iter().all(|r| r.error.is_none()));
        assert!(table.rows[3..].iter().all(|r| r.error.is_some()));
    }

    #[test]
    fn csv_round_trip_and_summary() {
        let table = period_factor_sweep(&paper_like(), &[1, 2]).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let back = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), table.rows.len());
        for (a, b) in back.iter().zip(&table.rows) {
            assert_eq!((a.factor, a.strategy, a.overhead_cost, a.schedulable_class), (b.factor, b.strategy, b.overhead_cost, b.schedulable_class));
        }
        assert_eq!(summarize(&back).len(), table.summary.len());
        let text = table.summary_text();
        assert!(text.contains("chronos-const"));
    }

    #[test]
    fn geometric_mean_skips_unschedulable_factors() {
        let row = |factor, reduction, class| SweepRow {
            factor,
            normalized_rate: Some(0.5),
            rate_vs_baseline: Some(0.5),
            strategy: StrategyKind::Chronos,
            total_time: Some(1),
            interrupts: Some(1),
            overhead_cost: Some(1),
            overhead_fraction: Some(0.1),
            reduction: Some(reduction),
            deadline_misses: Some(0),
            schedulable_class: Some(class),
            peak_reduction: None,
            mean_reduction: None,
            error: None,
        };
        let s = summarize(&[
            row(1, 100.0, SchedulabilityClass::NotSchedulable),
            row(2, 2.0, SchedulabilityClass::Chronos),
            row(3, 8.0, SchedulabilityClass::Schedulable),
        ]);
        assert_eq!(s[0].peak_reduction, Some(8.0));
        assert!((s[0].mean_reduction.unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(s[0].factors_counted, 2);
    }

    #[test]
    fn rejects_bad_factors() {
        assert!(period_factor_sweep(&paper_like(), &[]).is_err());
        assert!(period_factor_sweep(&paper_like(), &[0]).is_err());
    }
}
