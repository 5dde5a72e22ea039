//! Discrete-time simulation of a task set under one dispatching strategy.
//!
//! Time advances on the integer grid. At every boundary `t ≥ 1` the
//! simulator, in order: abandons jobs whose deadline has passed, fires the
//! timers with `P_j | t` (ascending timer index), records releases, applies
//! time slicing, then executes the interval `[t, t+1)`. Each interval offers
//! `capacity_per_unit` work units; a job needs `wcet` of them. All tasks are
//! released at `t = 0`.
//!
//! With `overhead_as_time`, interrupt and delay costs (in ledger units, times
//! `work_per_cost_unit`) are paid from the same capacity before any task
//! work, which is how overhead turns into deadline misses.

mod compare;
mod metrics;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::dispatch::{CostWeights, DispatcherState, OpCostLedger, StrategyKind};
use crate::error::{Error, Result};
use crate::model::{Mapping, TaskId, TaskSet, Time, TimerId, UNBOUNDED_RELEASES};

pub use compare::{classify, compare, ComparisonReport, ComparisonRow, SchedulabilityClass};
pub use metrics::{
    oracle_releases, write_metrics_csv, write_trace_csv, DeadlineMiss, EventKind, MetricsRow, SimMetrics,
    TimerMetrics, TraceEvent,
};
pub use sweep::{
    period_factor_sweep, read_sweep_csv, summarize, summary_text, write_sweep_csv, StrategySummary, SweepConfig,
    SweepRow, SweepTable,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorityPolicy {
    /// Shorter period runs first.
    #[default]
    RateMonotonic,
    /// Shorter relative deadline runs first.
    DeadlineMonotonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub policy: PriorityPolicy,
    /// Round-robin among equal priorities, one time unit per slice.
    pub time_slice: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig { policy: PriorityPolicy::RateMonotonic, time_slice: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// Stop after the boundary at this time (or earlier if every task retired).
    Fixed(Time),
    /// Run until every task has used up its release limit.
    UntilRetired,
}

/// What a task does once it has been released `releases_limit` times.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AfterLimit {
    /// Leave the timer structures for good.
    #[default]
    Retire,
    /// Keep being released and delayed every period, with no work.
    IdleReleases,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub task_set: TaskSet,
    /// Ignored by [`StrategyKind::Baseline`], which always uses one period-1 timer.
    pub mapping: Mapping,
    pub strategy: StrategyKind,
    pub weights: CostWeights,
    pub scheduler: SchedulerConfig,
    pub horizon: Horizon,
    pub capacity_per_unit: u64,
    pub work_per_cost_unit: u64,
    pub overhead_as_time: bool,
    pub after_limit: AfterLimit,
    /// Keep at most this many trace events; `None` disables the trace.
    pub trace_limit: Option<usize>,
}

impl SimConfig {
    /// Zero-overhead-time defaults: unit capacity, default weights,
    /// rate-monotonic with time slicing, no trace.
    pub fn new(task_set: TaskSet, mapping: Mapping, strategy: StrategyKind, horizon: Horizon) -> Self {
        SimConfig {
            task_set,
            mapping,
            strategy,
            weights: CostWeights::default(),
            scheduler: SchedulerConfig::default(),
            horizon,
            capacity_per_unit: 1,
            work_per_cost_unit: 1,
            overhead_as_time: false,
            after_limit: AfterLimit::Retire,
            trace_limit: None,
        }
    }

    pub fn with_strategy(&self, strategy: StrategyKind) -> Self {
        SimConfig { strategy, ..self.clone() }
    }

    pub fn with_trace(mut self, limit: usize) -> Self {
        self.trace_limit = Some(limit);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Horizon::Fixed(0) = self.horizon {
            return Err(Error::usage("fixed horizon must be >= 1"));
        }
        if self.horizon == Horizon::UntilRetired
            && self.task_set.tasks().iter().any(|t| t.releases_limit == UNBOUNDED_RELEASES)
        {
            return Err(Error::config("run-until-retired needs a finite release limit on every task"));
        }
        if self.capacity_per_unit == 0 {
            return Err(Error::usage("capacity per time unit must be >= 1"));
        }
        self.task_set.hyperperiod()?;
        if self.strategy != StrategyKind::Baseline {
            self.mapping.validate(&self.task_set)?;
        }
        Ok(())
    }

    fn priorities(&self) -> Vec<u64> {
        self.task_set
            .tasks()
            .iter()
            .map(|t| match self.scheduler.policy {
                PriorityPolicy::RateMonotonic => t.period,
                PriorityPolicy::DeadlineMonotonic => t.deadline,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Job {
    release: Time,
    deadline: Time,
    remaining: u64,
}

#[derive(Debug, Clone)]
struct TaskRun {
    job: Option<Job>,
    released: u32,
    /// Reached the release limit.
    finished: bool,
    /// Gone from the timer structures.
    retired: bool,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    state: DispatcherState,
    tasks: Vec<TaskRun>,
    interrupt_ledger: OpCostLedger,
    delay_ledger: OpCostLedger,
    backlog: u64,
    metrics: SimMetrics,
    active: usize,
}

impl Sim<'_> {
    fn trace(&mut self, time: Time, kind: EventKind, timer: Option<TimerId>, task: Option<TaskId>) {
        let Some(limit) = self.cfg.trace_limit else { return };
        let trace = self.metrics.trace.get_or_insert_with(Vec::new);
        if trace.len() < limit {
            trace.push(TraceEvent { time, kind, timer, task });
        } else {
            self.metrics.trace_truncated = true;
        }
    }

    fn charge(&mut self, cost: u64) {
        if self.cfg.overhead_as_time {
            self.backlog += cost * self.cfg.work_per_cost_unit;
        }
    }

    /// Ends the current job of `task`: retire it or park it until its next
    /// period after `now`.
    fn finish_job(&mut self, task: TaskId, now: Time) -> Result<()> {
        let i = task.0 as usize - 1;
        self.tasks[i].job = None;
        if !self.tasks[i].finished && self.tasks[i].released >= self.cfg.task_set.tasks()[i].releases_limit {
            self.tasks[i].finished = true;
            self.active -= 1;
            self.trace(now, EventKind::Retire, None, Some(task));
        }
        if self.tasks[i].finished && self.cfg.after_limit == AfterLimit::Retire {
            self.tasks[i].retired = true;
            return Ok(());
        }
        let before = self.delay_ledger;
        self.state.delay_task(task, now, &mut self.delay_ledger)?;
        let cost = self.delay_ledger.since(&before).total(&self.cfg.weights);
        self.charge(cost);
        Ok(())
    }

    fn release(&mut self, task: TaskId, time: Time) {
        let spec = &self.cfg.task_set.tasks()[task.0 as usize - 1];
        let run = &mut self.tasks[task.0 as usize - 1];
        let (deadline, wcet) = (time + spec.deadline, if run.finished { 0 } else { spec.wcet });
        run.job = Some(Job { release: time, deadline, remaining: wcet });
        run.released += 1;
    }

    fn detect_misses(&mut self, t: Time) -> Result<()> {
        for i in 0..self.tasks.len() {
            let Some(job) = &self.tasks[i].job else { continue };
            if job.deadline > t {
                continue;
            }
            let task = TaskId(i as u32 + 1);
            self.metrics.misses.push(DeadlineMiss { task, release: job.release, deadline: job.deadline });
            self.trace(t, EventKind::Miss, None, Some(task));
            self.state.ready_mut().remove(task);
            self.finish_job(task, t - 1)?;
        }
        Ok(())
    }

    fn fire_timers(&mut self, t: Time) -> Result<()> {
        for index in 0..self.state.timer_count() {
            let period = self.state.timer_period(index);
            if !t.is_multiple_of(period) {
                continue;
            }
            let id = self.state.timer_id(index);
            let required = self.cfg.task_set.tasks().iter().any(|task| {
                !self.tasks[task.id.0 as usize - 1].retired
                    && self.state.timer_of(task.id) == index
                    && t.is_multiple_of(task.period)
            });
            let before = self.interrupt_ledger;
            self.interrupt_ledger.interrupts += 1;
            let out = self.state.tick_timer(index, &mut self.interrupt_ledger)?;
            debug_assert_eq!(out.tick, t);
            let cost = self.interrupt_ledger.since(&before).total(&self.cfg.weights);
            self.charge(cost);

            let tm = &mut self.metrics.timers[index];
            tm.interrupts += 1;
            if required {
                tm.required += 1;
            } else {
                tm.not_required += 1;
            }
            let kind = if required { EventKind::Interrupt } else { EventKind::NotRequiredInterrupt };
            self.trace(t, kind, Some(id), None);
            for &task in &out.released {
                self.release(task, t);
                self.trace(t, EventKind::Release, Some(id), Some(task));
            }
            for &task in &out.skipped {
                self.metrics.skipped_slots += 1;
                self.trace(t, EventKind::Skip, Some(id), Some(task));
            }
        }
        Ok(())
    }

    /// Runs the interval `[t, t+1)`. Returns the task left running, if any.
    fn execute(&mut self, t: Time) -> Result<Option<TaskId>> {
        let mut capacity = self.cfg.capacity_per_unit;
        loop {
            let paid = self.backlog.min(capacity);
            self.backlog -= paid;
            capacity -= paid;
            self.metrics.overhead_units += paid;
            if self.backlog > 0 {
                return Ok(None);
            }
            let Some(task) = self.state.ready().peek() else {
                self.metrics.idle_units += capacity;
                return Ok(None);
            };
            let job = self.tasks[task.0 as usize - 1].job.as_mut().ok_or_else(|| {
                Error::invariant(format!("task {task} is ready without a job"))
            })?;
            let work = job.remaining.min(capacity);
            job.remaining -= work;
            capacity -= work;
            self.metrics.busy_units += work;
            if job.remaining > 0 {
                return Ok((work > 0).then_some(task));
            }
            self.state.ready_mut().remove(task);
            self.metrics.jobs_completed += 1;
            self.trace(t, EventKind::Complete, None, Some(task));
            self.finish_job(task, t)?;
        }
    }
}

/// Runs one simulation.
pub fn run(config: &SimConfig) -> Result<SimMetrics> {
    config.validate()?;
    let state = DispatcherState::with_priorities(&config.task_set, &config.mapping, config.strategy, config.priorities())?;
    let n = config.task_set.len();
    let timers = (0..state.timer_count())
        .map(|j| TimerMetrics { id: state.timer_id(j), period: state.timer_period(j), ..Default::default() })
        .collect();
    let mut sim = Sim {
        cfg: config,
        state,
        tasks: vec![TaskRun { job: None, released: 0, finished: false, retired: false }; n],
        interrupt_ledger: OpCostLedger::default(),
        delay_ledger: OpCostLedger::default(),
        backlog: 0,
        metrics: SimMetrics {
            strategy: config.strategy,
            capacity_per_unit: config.capacity_per_unit,
            work_per_cost_unit: config.work_per_cost_unit,
            timers,
            ..Default::default()
        },
        active: n,
    };
    for task in config.task_set.tasks() {
        sim.release(task.id, 0);
        sim.trace(0, EventKind::Release, None, Some(task.id));
    }

    // Every job is either completed or abandoned within one period, so each
    // task retires by `limit · T`.
    let limit = match config.horizon {
        Horizon::Fixed(h) => h,
        Horizon::UntilRetired => config
            .task_set
            .tasks()
            .iter()
            .map(|t| t.period.saturating_mul(t.releases_limit as u64))
            .max()
            .unwrap_or(0)
            .saturating_add(1),
    };

    let mut running = sim.execute(0)?;
    let mut end: Time = 1;
    for t in 1.. {
        if sim.active == 0 {
            break;
        }
        if t > limit {
            if config.horizon == Horizon::UntilRetired {
                return Err(Error::invariant(format!("tasks still active at t={t}")));
            }
            break;
        }
        sim.detect_misses(t)?;
        sim.fire_timers(t)?;
        if config.scheduler.time_slice {
            if let Some(task) = running {
                sim.state.ready_mut().rotate(task);
            }
        }
        if matches!(config.horizon, Horizon::Fixed(h) if t == h) {
            break;
        }
        running = sim.execute(t)?;
        end = t + 1;
    }
    let mut metrics = sim.metrics;
    metrics.total_time = end;
    metrics.interrupt_ledger = sim.interrupt_ledger;
    metrics.delay_ledger = sim.delay_ledger;
    metrics.interrupt_cost = sim.interrupt_ledger.total(&config.weights);
    metrics.delay_cost = sim.delay_ledger.total(&config.weights);
    metrics.overhead_backlog = sim.backlog;
    metrics.finalize();
    Ok(metrics)
}
