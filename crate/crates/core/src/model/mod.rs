//! Task sets, timers, task-to-timer mappings and the analytic
//! interrupt-rate formulas.
//!
//! Time is an integer grid of abstract time units. Every task releases its
//! first job synchronously at `t = 0`; that job starts out ready, so the
//! release points a dispatcher has to produce are the multiples
//! `k·T_i` with `k >= 1`.

mod generate;
mod rational;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{generate_task_set, GenerationSpec};
pub use rational::Rational;

/// A point or span on the time grid.
pub type Time = u64;

/// Sentinel for "nothing scheduled". Compared against, never incremented.
pub const TIME_MAX: Time = Time::MAX;

/// Number of jobs a task runs before it retires, unless configured.
pub const DEFAULT_RELEASES: u32 = 5;

/// Release limit that a simulation never reaches.
pub const UNBOUNDED_RELEASES: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimerId(pub u32);

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for TimerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A periodic task `(C_i, T_i, D_i)` with a bounded number of jobs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub period: Time,
    pub wcet: u64,
    pub deadline: Time,
    #[serde(rename = "releases")]
    pub releases_limit: u32,
}

impl Task {
    /// Implicit-deadline task with the default release limit.
    pub fn new(id: u32, period: Time, wcet: u64) -> Self {
        Task { id: TaskId(id), period, wcet, deadline: period, releases_limit: DEFAULT_RELEASES }
    }

    pub fn with_deadline(mut self, deadline: Time) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn with_releases(mut self, releases: u32) -> Self {
        self.releases_limit = releases;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::usage(format!("task {}: period must be >= 1", self.id)));
        }
        if self.deadline == 0 || self.deadline > self.period {
            return Err(Error::usage(format!(
                "task {}: deadline {} outside 1..={}",
                self.id, self.deadline, self.period
            )));
        }
        if self.releases_limit == 0 {
            return Err(Error::usage(format!("task {}: releases must be >= 1", self.id)));
        }
        Ok(())
    }
}

/// Ordered task collection with ids `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskSet {
    tasks: Vec<Task>,
}

impl TaskSet {
    pub fn new(mut tasks: Vec<Task>) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::usage("task set is empty"));
        }
        for task in &tasks {
            task.validate()?;
        }
        tasks.sort_by_key(|t| t.id);
        for (idx, task) in tasks.iter().enumerate() {
            if task.id.0 as usize != idx + 1 {
                return Err(Error::usage(format!(
                    "task ids must be unique and dense 1..={}; found {} at position {}",
                    tasks.len(),
                    task.id,
                    idx + 1
                )));
            }
        }
        let set = TaskSet { tasks };
        set.hyperperiod()?;
        Ok(set)
    }

    /// Builds implicit-deadline tasks with ids in the given order.
    pub fn from_periods(periods: &[Time], wcet: u64, releases: u32) -> Result<Self> {
        let tasks = periods
            .iter()
            .enumerate()
            .map(|(i, &p)| Task::new(i as u32 + 1, p, wcet).with_releases(releases))
            .collect();
        TaskSet::new(tasks)
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, id: TaskId) -> Option<&Task> {
        (id.0 as usize).checked_sub(1).and_then(|i| self.tasks.get(i))
    }

    pub fn periods(&self) -> Vec<Time> {
        self.tasks.iter().map(|t| t.period).collect()
    }

    pub fn distinct_periods(&self) -> Vec<Time> {
        let set: BTreeSet<Time> = self.tasks.iter().map(|t| t.period).collect();
        set.into_iter().collect()
    }

    /// lcm of all periods; errors if it does not fit in a [`Time`].
    pub fn hyperperiod(&self) -> Result<Time> {
        checked_lcm(self.tasks.iter().map(|t| t.period))
            .ok_or_else(|| Error::config("hyperperiod overflows the time type"))
    }

    /// Every period and deadline multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        if factor == 0 {
            return Err(Error::usage("period factor must be >= 1"));
        }
        let mut tasks = self.tasks.clone();
        for t in &mut tasks {
            t.period = t
                .period
                .checked_mul(factor)
                .ok_or_else(|| Error::config("scaled period overflows"))?;
            t.deadline *= factor;
        }
        TaskSet::new(tasks)
    }

    /// Replaces every task's WCET with `wcet`.
    pub fn with_wcet(&self, wcet: u64) -> Self {
        let mut set = self.clone();
        for t in &mut set.tasks {
            t.wcet = wcet;
        }
        set
    }

    pub fn with_releases(&self, releases: u32) -> Self {
        let mut set = self.clone();
        for t in &mut set.tasks {
            t.releases_limit = releases;
        }
        set
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            tasks: Vec<Task>,
        }
        let repr: Repr = serde_json::from_str(text).map_err(|e| Error::usage(format!("task-set json: {e}")))?;
        TaskSet::new(repr.tasks)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        TaskSet::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimerConfig {
    pub id: TimerId,
    pub period: Time,
}

/// One timer together with the tasks it releases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimerGroup {
    pub id: TimerId,
    pub period: Time,
    pub tasks: Vec<TaskId>,
}

/// Task-to-timer assignment and the timer periods it uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    timers: Vec<TimerConfig>,
    assignment: BTreeMap<TaskId, TimerId>,
}

impl Mapping {
    pub fn new(timers: Vec<TimerConfig>, assignment: BTreeMap<TaskId, TimerId>) -> Result<Self> {
        let mut timers = timers;
        timers.sort_by_key(|t| t.id);
        for w in timers.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::usage(format!("duplicate timer id {}", w[0].id)));
            }
        }
        if let Some(t) = timers.iter().find(|t| t.period == 0) {
            return Err(Error::usage(format!("timer {}: period must be >= 1", t.id)));
        }
        for (task, timer) in &assignment {
            if !timers.iter().any(|t| t.id == *timer) {
                return Err(Error::usage(format!("task {task} assigned to unknown timer {timer}")));
            }
        }
        Ok(Mapping { timers, assignment })
    }

    pub fn from_groups(groups: &[TimerGroup]) -> Result<Self> {
        let mut assignment = BTreeMap::new();
        for g in groups {
            for &task in &g.tasks {
                if assignment.insert(task, g.id).is_some() {
                    return Err(Error::usage(format!("task {task} assigned to more than one timer")));
                }
            }
        }
        let timers = groups.iter().map(|g| TimerConfig { id: g.id, period: g.period }).collect();
        Mapping::new(timers, assignment)
    }

    /// All tasks on one timer with the given period.
    pub fn single(tasks: &TaskSet, period: Time) -> Result<Self> {
        let id = TimerId(1);
        let assignment = tasks.tasks().iter().map(|t| (t.id, id)).collect();
        let mapping = Mapping::new(vec![TimerConfig { id, period }], assignment)?;
        mapping.validate(tasks)?;
        Ok(mapping)
    }

    /// The single-timer, period-1 configuration of a classic tick kernel.
    pub fn baseline(tasks: &TaskSet) -> Self {
        Mapping::single(tasks, 1).expect("period 1 divides every period")
    }

    /// Checks that every task is assigned exactly once and that each timer
    /// period divides the periods of its tasks.
    pub fn validate(&self, tasks: &TaskSet) -> Result<()> {
        for task in tasks.tasks() {
            let timer = self
                .assignment
                .get(&task.id)
                .ok_or_else(|| Error::config(format!("task {} has no timer", task.id)))?;
            let period = self.timer(*timer).expect("checked in new").period;
            if task.period % period != 0 {
                return Err(Error::config(format!(
                    "timer {timer} period {period} does not divide task {} period {}",
                    task.id, task.period
                )));
            }
        }
        if let Some(extra) = self.assignment.keys().find(|id| tasks.get(**id).is_none()) {
            return Err(Error::config(format!("mapping names unknown task {extra}")));
        }
        Ok(())
    }

    pub fn timers(&self) -> &[TimerConfig] {
        &self.timers
    }

    pub fn timer(&self, id: TimerId) -> Option<&TimerConfig> {
        self.timers.iter().find(|t| t.id == id)
    }

    pub fn timer_of(&self, task: TaskId) -> Option<TimerId> {
        self.assignment.get(&task).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<TaskId, TimerId> {
        &self.assignment
    }

    /// Groups in timer-id order, including timers without tasks.
    pub fn groups(&self) -> Vec<TimerGroup> {
        self.timers
            .iter()
            .map(|t| TimerGroup {
                id: t.id,
                period: t.period,
                tasks: self.assignment.iter().filter(|(_, tm)| **tm == t.id).map(|(task, _)| *task).collect(),
            })
            .collect()
    }

    /// Timers that carry at least one task.
    pub fn used_timers(&self) -> Vec<TimerConfig> {
        let used: BTreeSet<TimerId> = self.assignment.values().copied().collect();
        self.timers.iter().filter(|t| used.contains(&t.id)).copied().collect()
    }

    /// Every timer period multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        let timers = self
            .timers
            .iter()
            .map(|t| {
                t.period
                    .checked_mul(factor)
                    .map(|period| TimerConfig { id: t.id, period })
                    .ok_or_else(|| Error::config("scaled timer period overflows"))
            })
            .collect::<Result<_>>()?;
        Mapping::new(timers, self.assignment.clone())
    }

    /// Timer groups whose task periods do not form a divisibility chain.
    pub fn non_harmonic_groups(&self, tasks: &TaskSet) -> Vec<TimerGroup> {
        self.groups()
            .into_iter()
            .filter(|g| {
                let periods: Vec<Time> =
                    g.tasks.iter().filter_map(|id| tasks.get(*id)).map(|t| t.period).collect();
                !periods.is_empty() && !is_harmonic_chain(&periods)
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct MappingRepr {
    timers: Vec<TimerGroup>,
}

impl Serialize for Mapping {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MappingRepr { timers: self.groups() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mapping {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MappingRepr::deserialize(deserializer)?;
        Mapping::from_groups(&repr.timers).map_err(serde::de::Error::custom)
    }
}

/// lcm of `values`, or `None` on overflow.
pub fn checked_lcm(values: impl IntoIterator<Item = Time>) -> Option<Time> {
    values.into_iter().try_fold(1u64, |acc, v| {
        let g = acc.gcd(&v);
        (acc / g).checked_mul(v)
    })
}

/// Greatest common divisor of a nonempty set of positive integers.
pub fn gcd_of_periods(periods: &[Time]) -> Result<Time> {
    if periods.is_empty() {
        return Err(Error::usage("gcd of an empty period set"));
    }
    if periods.contains(&0) {
        return Err(Error::usage("periods must be >= 1"));
    }
    Ok(periods.iter().fold(0u64, |acc, &p| acc.gcd(&p)))
}

/// Expected tick interrupts per time unit, `Σ 1/P_j` over the timers that
/// carry tasks.
pub fn expected_interrupt_rate(mapping: &Mapping) -> Rational {
    mapping.used_timers().iter().map(|t| Rational::unit(t.period)).sum()
}

/// Time points in `[1, horizon]` at which at least one job is released.
pub fn required_ticks(tasks: &TaskSet, horizon: Time) -> BTreeSet<Time> {
    let mut ticks = BTreeSet::new();
    for task in tasks.tasks() {
        let mut t = task.period;
        while t <= horizon {
            ticks.insert(t);
            t += task.period;
        }
    }
    ticks
}

/// Whether the periods, sorted ascending, each divide their successor.
pub fn is_harmonic_chain(periods: &[Time]) -> bool {
    let mut sorted = periods.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).all(|w| w[0] != 0 && w[1] % w[0] == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_gcd(values: &[Time]) -> Time {
        let min = *values.iter().min().unwrap();
        (1..=min).rev().find(|d| values.iter().all(|v| v % d == 0)).unwrap()
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd_of_periods(&[2, 5]).unwrap(), 1);
        assert_eq!(gcd_of_periods(&[4, 8, 16]).unwrap(), 4);
        assert_eq!(brute_gcd(&[12, 18, 30]), 6);
        assert_eq!(gcd_of_periods(&[12, 18, 30]).unwrap(), 6);
        assert!(matches!(gcd_of_periods(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn rate_examples() {
        let ts = TaskSet::from_periods(&[2, 5], 0, 5).unwrap();
        let m = two_timer_mapping();
        m.validate(&ts).unwrap();
        assert_eq!(expected_interrupt_rate(&m), Rational::new(7, 10).unwrap());

        let ts3 = TaskSet::from_periods(&[2, 3, 5], 0, 5).unwrap();
        let groups: Vec<TimerGroup> = [2u64, 3, 5]
            .iter()
            .enumerate()
            .map(|(i, &p)| TimerGroup { id: TimerId(i as u32 + 1), period: p, tasks: vec![TaskId(i as u32 + 1)] })
            .collect();
        let m3 = Mapping::from_groups(&groups).unwrap();
        m3.validate(&ts3).unwrap();
        assert_eq!(expected_interrupt_rate(&m3), Rational::new(31, 30).unwrap());

        assert_eq!(expected_interrupt_rate(&Mapping::baseline(&ts3)), Rational::ONE);
    }

    #[test]
    fn unused_timers_do_not_count() {
        let groups = vec![
            TimerGroup { id: TimerId(1), period: 2, tasks: vec![TaskId(1)] },
            TimerGroup { id: TimerId(2), period: 3, tasks: vec![] },
        ];
        let m = Mapping::from_groups(&groups).unwrap();
        assert_eq!(expected_interrupt_rate(&m), Rational::new(1, 2).unwrap());
    }

    fn two_timer_mapping() -> Mapping {
        Mapping::from_groups(&[
            TimerGroup { id: TimerId(1), period: 2, tasks: vec![TaskId(1)] },
            TimerGroup { id: TimerId(2), period: 5, tasks: vec![TaskId(2)] },
        ])
        .unwrap()
    }

    #[test]
    fn required_ticks_examples() {
        let ts = TaskSet::from_periods(&[2, 5], 0, 5).unwrap();
        let req = required_ticks(&ts, 10);
        assert_eq!(req.iter().copied().collect::<Vec<_>>(), vec![2, 4, 5, 6, 8, 10]);
        let not_required: Vec<Time> = (1..=10).filter(|t| !req.contains(t)).collect();
        assert_eq!(not_required, vec![1, 3, 7, 9]);

        let ones = TaskSet::from_periods(&[1], 0, 5).unwrap();
        assert_eq!(required_ticks(&ones, 4).into_iter().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn harmonic_chain_examples() {
        assert!(is_harmonic_chain(&[3, 6, 12, 24, 48]));
        assert!(is_harmonic_chain(&[48, 3, 12, 6, 24]));
        assert!(!is_harmonic_chain(&[2, 3]));
        assert!(is_harmonic_chain(&[7]));
        assert!(is_harmonic_chain(&[4, 4, 8]));
    }

    #[test]
    fn task_set_rejects_bad_ids_and_tasks() {
        assert!(TaskSet::new(vec![]).is_err());
        assert!(TaskSet::new(vec![Task::new(1, 4, 0), Task::new(3, 4, 0)]).is_err());
        assert!(TaskSet::new(vec![Task::new(1, 4, 0), Task::new(1, 4, 0)]).is_err());
        assert!(TaskSet::new(vec![Task::new(1, 0, 0)]).is_err());
        assert!(TaskSet::new(vec![Task::new(1, 4, 0).with_deadline(5)]).is_err());
        assert!(TaskSet::new(vec![Task::new(1, 4, 0).with_releases(0)]).is_err());
    }

    #[test]
    fn hyperperiod_overflow_rejected() {
        let primes = [1_000_003u64, 1_000_033, 1_000_037, 1_000_039];
        let err = TaskSet::from_periods(&primes, 0, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn mapping_validation() {
        let ts = TaskSet::from_periods(&[2, 5], 0, 5).unwrap();
        let bad = Mapping::single(&ts, 2);
        assert!(matches!(bad, Err(Error::Config(_))));
        let m = two_timer_mapping();
        let ts3 = TaskSet::from_periods(&[2, 5, 7], 0, 5).unwrap();
        assert!(m.validate(&ts3).is_err());
    }

    #[test]
    fn task_set_json_schema() {
        let text = r#"{ "tasks": [ {"id":1,"period":6,"wcet":1,"deadline":6,"releases":5} ] }"#;
        let ts = TaskSet::from_json(text).unwrap();
        assert_eq!(ts.tasks()[0], Task::new(1, 6, 1));
        let back = TaskSet::from_json(&ts.to_json().unwrap()).unwrap();
        assert_eq!(back, ts);
        assert!(TaskSet::from_json(r#"{"tasks":[{"id":1,"period":6.5,"wcet":1,"deadline":6,"releases":5}]}"#).is_err());
    }

    #[test]
    fn mapping_json_shape() {
        let m = two_timer_mapping();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"timers":[{"id":1,"period":2,"tasks":[1]},{"id":2,"period":5,"tasks":[2]}]}"#);
        let back: Mapping = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gcd_is_greatest_common_divisor(values in prop::collection::vec(1u64..200, 1..6)) {
                let g = gcd_of_periods(&values).unwrap();
                prop_assert!(values.iter().all(|v| v % g == 0));
                prop_assert_eq!(g, brute_gcd(&values));
            }

            #[test]
            fn required_ticks_is_union_of_multiples(periods in prop::collection::vec(1u64..15, 1..5), horizon in 1u64..120) {
                let ts = TaskSet::from_periods(&periods, 0, 1).unwrap();
                let got = required_ticks(&ts, horizon);
                let expected: BTreeSet<Time> = (1..=horizon)
                    .filter(|t| periods.iter().any(|p| t % p == 0))
                    .collect();
                prop_assert_eq!(got, expected);
            }
        }
    }
}
