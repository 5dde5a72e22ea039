use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dispatch::{OpCostLedger, StrategyKind};
use crate::error::Result;
use crate::model::{required_ticks, TaskId, TaskSet, Time, TimerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// Timer interrupt at which some active task of the group has a release.
    Interrupt,
    NotRequiredInterrupt,
    Release,
    /// Harmonic slot due but empty.
    Skip,
    Complete,
    Miss,
    Retire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: Time,
    #[serde(rename = "event_kind")]
    pub kind: EventKind,
    pub timer: Option<TimerId>,
    pub task: Option<TaskId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlineMiss {
    pub task: TaskId,
    pub release: Time,
    pub deadline: Time,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimerMetrics {
    pub id: TimerId,
    pub period: Time,
    pub interrupts: u64,
    pub required: u64,
    pub not_required: u64,
}

/// Counters of one simulation. Costs are ledger units; `*_units` are work
/// units of simulated capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub strategy: StrategyKind,
    pub timers: Vec<TimerMetrics>,
    pub total_interrupts: u64,
    pub required_interrupts: u64,
    pub not_required_interrupts: u64,
    pub interrupt_cost: u64,
    pub delay_cost: u64,
    pub overhead_cost: u64,
    pub interrupt_ledger: OpCostLedger,
    pub delay_ledger: OpCostLedger,
    pub total_time: Time,
    pub capacity_per_unit: u64,
    /// Work units one ledger unit is worth.
    pub work_per_cost_unit: u64,
    pub busy_units: u64,
    pub idle_units: u64,
    /// Overhead actually paid from capacity (overhead-as-time mode only).
    pub overhead_units: u64,
    /// Overhead still unpaid when the run ended.
    pub overhead_backlog: u64,
    pub jobs_completed: u64,
    pub misses: Vec<DeadlineMiss>,
    pub skipped_slots: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<TraceEvent>>,
    pub trace_truncated: bool,
}

impl Default for SimMetrics {
    fn default() -> Self {
        SimMetrics {
            strategy: StrategyKind::Baseline,
            timers: Vec::new(),
            total_interrupts: 0,
            required_interrupts: 0,
            not_required_interrupts: 0,
            interrupt_cost: 0,
            delay_cost: 0,
            overhead_cost: 0,
            interrupt_ledger: OpCostLedger::default(),
            delay_ledger: OpCostLedger::default(),
            total_time: 0,
            capacity_per_unit: 1,
            work_per_cost_unit: 1,
            busy_units: 0,
            idle_units: 0,
            overhead_units: 0,
            overhead_backlog: 0,
            jobs_completed: 0,
            misses: Vec::new(),
            skipped_slots: 0,
            trace: None,
            trace_truncated: false,
        }
    }
}

impl SimMetrics {
    pub(crate) fn finalize(&mut self) {
        self.total_interrupts = self.timers.iter().map(|t| t.interrupts).sum();
        self.required_interrupts = self.timers.iter().map(|t| t.required).sum();
        self.not_required_interrupts = self.timers.iter().map(|t| t.not_required).sum();
        self.overhead_cost = self.interrupt_cost + self.delay_cost;
    }

    pub fn deadline_misses(&self) -> usize {
        self.misses.len()
    }

    pub fn schedulable(&self) -> bool {
        self.misses.is_empty()
    }

    /// Share of consumed work (task work plus overhead) that is overhead.
    pub fn overhead_fraction(&self) -> f64 {
        let overhead = (self.overhead_cost * self.work_per_cost_unit) as f64;
        let total = overhead + self.busy_units as f64;
        if total == 0.0 {
            0.0
        } else {
            overhead / total
        }
    }

    /// Releases from the trace as `(time, task)`, sorted. Empty without a trace.
    pub fn releases(&self) -> Vec<(Time, TaskId)> {
        let mut out: Vec<(Time, TaskId)> = self
            .events(EventKind::Release)
            .filter_map(|e| e.task.map(|task| (e.time, task)))
            .collect();
        out.sort();
        out
    }

    /// Times of not-required interrupts from the trace.
    pub fn not_required_times(&self) -> Vec<Time> {
        self.events(EventKind::NotRequiredInterrupt).map(|e| e.time).collect()
    }

    pub fn events(&self, kind: EventKind) -> impl Iterator<Item = &TraceEvent> + '_ {
        self.trace.iter().flatten().filter(move |e| e.kind == kind)
    }

    pub fn row(&self) -> MetricsRow {
        MetricsRow {
            strategy: self.strategy,
            total_time: self.total_time,
            total_interrupts: self.total_interrupts,
            required_interrupts: self.required_interrupts,
            not_required_interrupts: self.not_required_interrupts,
            interrupt_cost: self.interrupt_cost,
            delay_cost: self.delay_cost,
            overhead_cost: self.overhead_cost,
            overhead_fraction: self.overhead_fraction(),
            busy_units: self.busy_units,
            idle_units: self.idle_units,
            overhead_units: self.overhead_units,
            jobs_completed: self.jobs_completed,
            deadline_misses: self.misses.len() as u64,
            skipped_slots: self.skipped_slots,
            timer_interrupts: self
                .timers
                .iter()
                .map(|t| format!("{}:{}", t.id, t.interrupts))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Flat CSV form of [`SimMetrics`]. `timer_interrupts` is `id:count` pairs
/// joined by `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub strategy: StrategyKind,
    pub total_time: Time,
    pub total_interrupts: u64,
    pub required_interrupts: u64,
    pub not_required_interrupts: u64,
    pub interrupt_cost: u64,
    pub delay_cost: u64,
    pub overhead_cost: u64,
    pub overhead_fraction: f64,
    pub busy_units: u64,
    pub idle_units: u64,
    pub overhead_units: u64,
    pub jobs_completed: u64,
    pub deadline_misses: u64,
    pub skipped_slots: u64,
    pub timer_interrupts: String,
}

pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `time,event_kind,timer,task`; absent fields are empty.
pub fn write_trace_csv<W: Write>(out: W, events: &[TraceEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "event_kind", "timer", "task"])?;
    for e in events {
        w.serialize((e.time, e.kind, e.timer, e.task))?;
    }
    w.flush()?;
    Ok(())
}

/// Expected releases over `[0, horizon]`: every task at 0, then each task
/// at every multiple of its period.
pub fn oracle_releases(tasks: &TaskSet, horizon: Time) -> Vec<(Time, TaskId)> {
    let mut out: Vec<(Time, TaskId)> = tasks.tasks().iter().map(|t| (0, t.id)).collect();
    for t in required_ticks(tasks, horizon) {
        out.extend(tasks.tasks().iter().filter(|task| t % task.period == 0).map(|task| (t, task.id)));
    }
    out.sort();
    out
}
