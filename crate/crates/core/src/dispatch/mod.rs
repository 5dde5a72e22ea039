//! Tick-interrupt routines over per-timer dispatcher state.
//!
//! Every timer `j` owns a tick counter advanced by `P_j` per interrupt, a
//! list of delayed tasks and a cached `timerNextRelease_j`. Released tasks
//! move to one global [`ReadyList`]. Four strategies differ only in how the
//! timer list is kept:
//!
//! * [`StrategyKind::Baseline`] and [`StrategyKind::Chronos`]: list sorted by
//!   next release; the interrupt pops from the head. Baseline is Chronos
//!   with a single period-1 timer holding every task.
//! * [`StrategyKind::ChronosConst`]: unsorted list; delay appends, the
//!   interrupt scans the whole list.
//! * [`StrategyKind::ChronosHarmonic`]: fixed slot array sorted by task
//!   period; delay writes the task back into its slot, the interrupt walks
//!   slots until a period does not divide the tick.
//!
//! Each primitive is charged to an [`OpCostLedger`].

mod ledger;
mod ready;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mapping, TaskId, TaskSet, Time, TimerId, TIME_MAX};

pub use ledger::{CostWeights, OpCostLedger};
pub use ready::ReadyList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Baseline,
    Chronos,
    ChronosConst,
    ChronosHarmonic,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] =
        [StrategyKind::Baseline, StrategyKind::Chronos, StrategyKind::ChronosConst, StrategyKind::ChronosHarmonic];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Baseline => "baseline",
            StrategyKind::Chronos => "chronos",
            StrategyKind::ChronosConst => "chronos-const",
            StrategyKind::ChronosHarmonic => "chronos-harmonic",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "baseline" => Ok(StrategyKind::Baseline),
            "chronos" => Ok(StrategyKind::Chronos),
            "chronos-const" | "const" => Ok(StrategyKind::ChronosConst),
            "chronos-harmonic" | "harmonic" => Ok(StrategyKind::ChronosHarmonic),
            other => Err(Error::usage(format!("unknown strategy '{other}'"))),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::parse(s)
    }
}

/// Result of one interrupt. `released` is in task-id order whatever the
/// list order, so every strategy feeds the ready list identically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickOutcome {
    pub timer: Option<TimerId>,
    /// Tick count after the increment.
    pub tick: Time,
    pub released: Vec<TaskId>,
    /// Harmonic slots that were due but empty because the task is not delayed.
    pub skipped: Vec<TaskId>,
    pub early_exit: bool,
    /// List elements or slots examined.
    pub inspected: u64,
}

#[derive(Debug, Clone)]
enum TimerList {
    /// Ascending by next release; equal releases in insertion order.
    Sorted(Vec<TaskId>),
    Unsorted(Vec<TaskId>),
    /// One slot per task, ascending by (period, id). `None` marks a task that
    /// is not currently delayed.
    Slots { tasks: Vec<TaskId>, periods: Vec<Time>, filled: Vec<bool> },
}

#[derive(Debug, Clone)]
struct TimerState {
    id: TimerId,
    period: Time,
    tick: Time,
    next_release: Time,
    list: TimerList,
}

#[derive(Debug, Clone)]
struct TaskState {
    period: Time,
    timer: usize,
    slot: usize,
    next_release: Time,
    delayed: bool,
}

/// Tick counters, timer lists and the ready list of one dispatcher.
#[derive(Debug, Clone)]
pub struct DispatcherState {
    strategy: StrategyKind,
    timers: Vec<TimerState>,
    tasks: Vec<TaskState>,
    ready: ReadyList,
}

impl DispatcherState {
    /// Rate-monotonic ready-list priorities (shorter period first).
    pub fn new(tasks: &TaskSet, mapping: &Mapping, strategy: StrategyKind) -> Result<Self> {
        let priority = tasks.tasks().iter().map(|t| t.period).collect();
        DispatcherState::with_priorities(tasks, mapping, strategy, priority)
    }

    /// All tasks start released and ready (the synchronous release at `t = 0`);
    /// every timer list starts empty. Only timers with tasks are kept. For
    /// [`StrategyKind::Baseline`] the given mapping is replaced by a single
    /// period-1 timer.
    pub fn with_priorities(
        tasks: &TaskSet,
        mapping: &Mapping,
        strategy: StrategyKind,
        priority: Vec<u64>,
    ) -> Result<Self> {
        let baseline;
        let mapping = if strategy == StrategyKind::Baseline {
            baseline = Mapping::baseline(tasks);
            &baseline
        } else {
            mapping
        };
        mapping.validate(tasks)?;
        if strategy == StrategyKind::ChronosHarmonic {
            let bad = mapping.non_harmonic_groups(tasks);
            if !bad.is_empty() {
                let listing: Vec<String> = bad
                    .iter()
                    .map(|g| {
                        let mut periods: Vec<Time> = g.tasks.iter().map(|t| tasks.get(*t).unwrap().period).collect();
                        periods.sort_unstable();
                        periods.dedup();
                        let periods: Vec<String> = periods.iter().map(|p| p.to_string()).collect();
                        format!("timer {} periods [{}]", g.id, periods.join(", "))
                    })
                    .collect();
                return Err(Error::config(format!(
                    "chronos-harmonic needs harmonic timer groups; offending: {}",
                    listing.join("; ")
                )));
            }
        }
        if priority.len() != tasks.len() {
            return Err(Error::usage("one priority per task required"));
        }

        let mut timers = Vec::new();
        let mut task_states: Vec<TaskState> = tasks
            .tasks()
            .iter()
            .map(|t| TaskState { period: t.period, timer: usize::MAX, slot: usize::MAX, next_release: 0, delayed: false })
            .collect();
        for group in mapping.groups().into_iter().filter(|g| !g.tasks.is_empty()) {
            let index = timers.len();
            let list = match strategy {
                StrategyKind::Baseline | StrategyKind::Chronos => TimerList::Sorted(Vec::new()),
                StrategyKind::ChronosConst => TimerList::Unsorted(Vec::new()),
                StrategyKind::ChronosHarmonic => {
                    let mut members = group.tasks.clone();
                    members.sort_by_key(|id| (tasks.get(*id).unwrap().period, *id));
                    for (slot, id) in members.iter().enumerate() {
                        task_states[id.0 as usize - 1].slot = slot;
                    }
                    TimerList::Slots {
                        periods: members.iter().map(|id| tasks.get(*id).unwrap().period).collect(),
                        filled: vec![false; members.len()],
                        tasks: members,
                    }
                }
            };
            for id in &group.tasks {
                task_states[id.0 as usize - 1].timer = index;
            }
            timers.push(TimerState { id: group.id, period: group.period, tick: 0, next_release: TIME_MAX, list });
        }

        let mut ready = ReadyList::new(priority);
        for t in tasks.tasks() {
            ready.push(t.id);
        }
        Ok(DispatcherState { strategy, timers, tasks: task_states, ready })
    }

    pub fn strategy(&self) -> StrategyKind {
        self.strategy
    }

    pub fn timer_count(&self) -> usize {
        self.timers.len()
    }

    pub fn timer_id(&self, index: usize) -> TimerId {
        self.timers[index].id
    }

    pub fn timer_period(&self, index: usize) -> Time {
        self.timers[index].period
    }

    pub fn tick(&self, index: usize) -> Time {
        self.timers[index].tick
    }

    /// Cached earliest release among the timer's delayed tasks, or [`TIME_MAX`].
    pub fn timer_next_release(&self, index: usize) -> Time {
        self.timers[index].next_release
    }

    /// Index of the timer serving `task`.
    pub fn timer_of(&self, task: TaskId) -> usize {
        self.tasks[task.0 as usize - 1].timer
    }

    pub fn next_release(&self, task: TaskId) -> Time {
        self.tasks[task.0 as usize - 1].next_release
    }

    pub fn is_delayed(&self, task: TaskId) -> bool {
        self.tasks[task.0 as usize - 1].delayed
    }

    pub fn ready(&self) -> &ReadyList {
        &self.ready
    }

    pub fn ready_mut(&mut self) -> &mut ReadyList {
        &mut self.ready
    }

    /// Tasks in the timer's list, in list order. For the harmonic strategy,
    /// only filled slots.
    pub fn timer_list(&self, index: usize) -> Vec<TaskId> {
        match &self.timers[index].list {
            TimerList::Sorted(l) | TimerList::Unsorted(l) => l.clone(),
            TimerList::Slots { tasks, filled, .. } => {
                tasks.iter().zip(filled).filter(|(_, f)| **f).map(|(t, _)| *t).collect()
            }
        }
    }

    /// Runs the strategy's interrupt routine for timer `index`.
    pub fn tick_timer(&mut self, index: usize, ledger: &mut OpCostLedger) -> Result<TickOutcome> {
        match self.strategy {
            StrategyKind::Baseline | StrategyKind::Chronos => self.tick_chronos(index, ledger),
            StrategyKind::ChronosConst => self.tick_chronos_const(index, ledger),
            StrategyKind::ChronosHarmonic => self.tick_chronos_harmonic(index, ledger),
        }
    }

    /// Single-timer, period-1 interrupt of a classic tick kernel.
    pub fn tick_baseline(&mut self, ledger: &mut OpCostLedger) -> Result<TickOutcome> {
        if self.timers.len() != 1 || self.timers[0].period != 1 {
            return Err(Error::invariant("baseline tick needs exactly one period-1 timer"));
        }
        self.tick_chronos(0, ledger)
    }

    /// Sorted-list routine: early exit below `timerNextRelease`, otherwise
    /// pop due tasks from the head.
    pub fn tick_chronos(&mut self, index: usize, ledger: &mut OpCostLedger) -> Result<TickOutcome> {
        if cfg!(debug_assertions) {
            self.check_sorted(index)?;
        }
        let timer = &mut self.timers[index];
        let TimerList::Sorted(list) = &mut timer.list else {
            return Err(Error::invariant("tick_chronos on a non-sorted timer list"));
        };
        timer.tick += timer.period;
        ledger.tick_increments += 1;
        let mut out = TickOutcome { timer: Some(timer.id), tick: timer.tick, ..Default::default() };

        ledger.comparisons += 1;
        if timer.tick < timer.next_release {
            out.early_exit = true;
            return Ok(out);
        }
        let mut popped = 0;
        loop {
            ledger.comparisons += 1;
            let Some(&head) = list.get(popped) else {
                timer.next_release = TIME_MAX;
                break;
            };
            ledger.inspections += 1;
            out.inspected += 1;
            let release = self.tasks[head.0 as usize - 1].next_release;
            if release > timer.tick {
                timer.next_release = release;
                break;
            }
            popped += 1;
            out.released.push(head);
        }
        list.drain(..popped);
        out.released.sort();
        for &task in &out.released {
            ledger.removals += 1;
            self.tasks[task.0 as usize - 1].delayed = false;
            self.ready.push(task);
            ledger.ready_inserts += 1;
        }
        self.debug_check(index)?;
        Ok(out)
    }

    /// Unsorted-list routine: past the guard, every element is examined;
    /// due tasks are unlinked (successor saved first) and the rest determine
    /// the new `timerNextRelease`.
    pub fn tick_chronos_const(&mut self, index: usize, ledger: &mut OpCostLedger) -> Result<TickOutcome> {
        let timer = &mut self.timers[index];
        let TimerList::Unsorted(list) = &mut timer.list else {
            return Err(Error::invariant("tick_chronos_const on a non-list timer"));
        };
        timer.tick += timer.period;
        ledger.tick_increments += 1;
        let mut out = TickOutcome { timer: Some(timer.id), tick: timer.tick, ..Default::default() };

        ledger.comparisons += 1;
        if timer.tick < timer.next_release {
            out.early_exit = true;
            return Ok(out);
        }
        timer.next_release = TIME_MAX;
        let mut pos = 0;
        while pos < list.len() {
            let task = list[pos];
            ledger.inspections += 1;
            out.inspected += 1;
            let release = self.tasks[task.0 as usize - 1].next_release;
            if release > timer.tick {
                ledger.comparisons += 1;
                if release < timer.next_release {
                    timer.next_release = release;
                }
                pos += 1;
            } else {
                // Removing at `pos` leaves the successor at `pos`.
                list.remove(pos);
                ledger.removals += 1;
                out.released.push(task);
            }
        }
        out.released.sort();
        for &task in &out.released {
            self.tasks[task.0 as usize - 1].delayed = false;
            self.ready.push(task);
            ledger.ready_inserts += 1;
        }
        self.debug_check(index)?;
        Ok(out)
    }

    /// Slot-array routine for harmonic groups: walk slots in period order,
    /// stop at the first period that does not divide the tick, skip empty
    /// slots, release the rest.
    pub fn tick_chronos_harmonic(&mut self, index: usize, ledger: &mut OpCostLedger) -> Result<TickOutcome> {
        let timer = &mut self.timers[index];
        let TimerList::Slots { tasks, periods, filled } = &mut timer.list else {
            return Err(Error::invariant("tick_chronos_harmonic on a non-slot timer"));
        };
        timer.tick += timer.period;
        ledger.tick_increments += 1;
        let mut out = TickOutcome { timer: Some(timer.id), tick: timer.tick, ..Default::default() };

        for slot in 0..tasks.len() {
            ledger.inspections += 1;
            out.inspected += 1;
            if !timer.tick.is_multiple_of(periods[slot]) {
                break;
            }
            if !filled[slot] {
                out.skipped.push(tasks[slot]);
                continue;
            }
            filled[slot] = false;
            ledger.slot_writes += 1;
            out.released.push(tasks[slot]);
        }
        out.early_exit = out.released.is_empty() && out.skipped.is_empty();
        out.released.sort();
        for &task in &out.released {
            self.tasks[task.0 as usize - 1].delayed = false;
            self.ready.push(task);
            ledger.ready_inserts += 1;
        }
        // Not read by this routine; kept so every strategy shares the invariant.
        self.timers[index].next_release = self.recompute_next_release(index);
        self.debug_check(index)?;
        Ok(out)
    }

    /// Parks `task` until its next release: the smallest multiple of its
    /// period strictly after `now`. Returns that release time.
    ///
    /// The task must be neither delayed nor in the ready list.
    pub fn delay_task(&mut self, task: TaskId, now: Time, ledger: &mut OpCostLedger) -> Result<Time> {
        let i = task.0 as usize - 1;
        let state = self.tasks.get(i).ok_or_else(|| Error::usage(format!("unknown task {task}")))?;
        if state.delayed {
            return Err(Error::invariant(format!("task {task} is already delayed")));
        }
        if self.ready.contains(task) {
            return Err(Error::invariant(format!("task {task} is still in the ready list")));
        }
        let release = (now / state.period + 1) * state.period;
        let (index, slot) = (state.timer, state.slot);
        self.tasks[i].next_release = release;
        self.tasks[i].delayed = true;

        let tasks = &self.tasks;
        let timer = &mut self.timers[index];
        match &mut timer.list {
            TimerList::Sorted(list) => {
                let mut pos = 0;
                while pos < list.len() && tasks[list[pos].0 as usize - 1].next_release <= release {
                    pos += 1;
                }
                // Elements passed plus the link step.
                ledger.sorted_insert_steps += pos as u64 + 1;
                list.insert(pos, task);
            }
            TimerList::Unsorted(list) => {
                ledger.appends += 1;
                list.push(task);
            }
            TimerList::Slots { filled, .. } => {
                ledger.slot_writes += 1;
                filled[slot] = true;
            }
        }
        ledger.comparisons += 1;
        if release < timer.next_release {
            timer.next_release = release;
        }
        self.debug_check(index)?;
        Ok(release)
    }

    fn recompute_next_release(&self, index: usize) -> Time {
        self.timer_list(index).iter().map(|t| self.tasks[t.0 as usize - 1].next_release).min().unwrap_or(TIME_MAX)
    }

    fn check_sorted(&self, index: usize) -> Result<()> {
        if let TimerList::Sorted(list) = &self.timers[index].list {
            let releases: Vec<Time> = list.iter().map(|t| self.tasks[t.0 as usize - 1].next_release).collect();
            if releases.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invariant(format!("timer {} list is not sorted", self.timers[index].id)));
            }
        }
        Ok(())
    }

    fn debug_check(&self, index: usize) -> Result<()> {
        if cfg!(debug_assertions) {
            self.check_invariants(index)
        } else {
            Ok(())
        }
    }

    /// Verifies sorted order (sorted strategies), `timerNextRelease` equal to
    /// the list minimum, and a tick that is a multiple of the timer period.
    pub fn check_invariants(&self, index: usize) -> Result<()> {
        self.check_sorted(index)?;
        let timer = &self.timers[index];
        let expected = self.recompute_next_release(index);
        if timer.next_release != expected {
            return Err(Error::invariant(format!(
                "timer {} next release {} but list minimum is {}",
                timer.id, timer.next_release, expected
            )));
        }
        if !timer.tick.is_multiple_of(timer.period) {
            return Err(Error::invariant(format!("timer {} tick {} not a multiple of {}", timer.id, timer.tick, timer.period)));
        }
        Ok(())
    }

    /// Test hook: swaps two entries of a sorted list to break its order.
    #[doc(hidden)]
    pub fn corrupt_order_for_test(&mut self, index: usize) {
        if let TimerList::Sorted(list) = &mut self.timers[index].list {
            if list.len() >= 2 {
                list.swap(0, 1);
            }
        }
    }
}
