use serde::{Deserialize, Serialize};

use super::{run, SimConfig, SimMetrics};
use crate::dispatch::StrategyKind;
use crate::error::{Error, Result};
use crate::model::Rational;

/// Which dispatching methods avoid every deadline miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulabilityClass {
    /// No method misses.
    Schedulable,
    /// The baseline misses; Chronos or Chronos-const does not.
    Chronos,
    /// Only Chronos-harmonic avoids misses.
    Harmonic,
    /// Every method misses.
    NotSchedulable,
    /// Any other combination.
    Mixed,
}

impl std::fmt::Display for SchedulabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchedulabilityClass::Schedulable => "schedulable",
            SchedulabilityClass::Chronos => "chronos",
            SchedulabilityClass::Harmonic => "harmonic",
            SchedulabilityClass::NotSchedulable => "not-schedulable",
            SchedulabilityClass::Mixed => "mixed",
        })
    }
}

/// Classifies from `(strategy, schedulable)` pairs.
pub fn classify(results: &[(StrategyKind, bool)]) -> SchedulabilityClass {
    let ok = |s: StrategyKind| results.iter().any(|(k, ok)| *k == s && *ok);
    if results.iter().all(|(_, ok)| *ok) {
        return SchedulabilityClass::Schedulable;
    }
    if results.iter().all(|(_, ok)| !*ok) {
        return SchedulabilityClass::NotSchedulable;
    }
    if ok(StrategyKind::Baseline) {
        return SchedulabilityClass::Mixed;
    }
    if ok(StrategyKind::Chronos) || ok(StrategyKind::ChronosConst) {
        return SchedulabilityClass::Chronos;
    }
    if ok(StrategyKind::ChronosHarmonic) {
        return SchedulabilityClass::Harmonic;
    }
    SchedulabilityClass::Mixed
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: StrategyKind,
    pub metrics: SimMetrics,
    /// Reference overhead cost divided by this row's; infinite if this row
    /// has no overhead.
    pub overhead_ratio: f64,
    /// Reference interrupt count divided by this row's.
    pub interrupt_ratio: Option<Rational>,
    pub schedulable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Index of the reference row: the first baseline, else the first row.
    pub reference: usize,
    pub rows: Vec<ComparisonRow>,
    pub class: SchedulabilityClass,
}

/// Runs every config and reports them against the reference.
pub fn compare(configs: &[SimConfig]) -> Result<ComparisonReport> {
    if configs.len() < 2 {
        return Err(Error::usage("compare needs at least two configurations"));
    }
    let first = &configs[0];
    if configs.iter().any(|c| c.task_set != first.task_set) {
        return Err(Error::usage("compared configurations must share one task set"));
    }
    if configs.iter().any(|c| c.weights != first.weights) {
        return Err(Error::usage("compared configurations must share cost weights"));
    }
    let metrics = configs.iter().map(run).collect::<Result<Vec<_>>>()?;
    let reference = configs.iter().position(|c| c.strategy == StrategyKind::Baseline).unwrap_or(0);
    let base = &metrics[reference];
    let rows = configs
        .iter()
        .zip(&metrics)
        .map(|(c, m)| ComparisonRow {
            strategy: c.strategy,
            overhead_ratio: ratio(base.overhead_cost, m.overhead_cost),
            interrupt_ratio: (m.total_interrupts > 0)
                .then(|| Rational::new(base.total_interrupts as i128, m.total_interrupts as i128).ok())
                .flatten(),
            schedulable: m.schedulable(),
            metrics: m.clone(),
        })
        .collect::<Vec<_>>();
    let class = classify(&rows.iter().map(|r| (r.strategy, r.schedulable)).collect::<Vec<_>>());
    Ok(ComparisonReport { reference, rows, class })
}

pub(crate) fn ratio(reference: u64, value: u64) -> f64 {
    match (reference, value) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        (r, v) => r as f64 / v as f64,
    }
}
