//! Choosing timer periods and a task-to-timer assignment that minimise the
//! expected tick-interrupt rate `Σ 1/P_j`.
//!
//! Only the distinct task periods matter: tasks sharing a period always go to
//! the same timer. A solution is a partition of the distinct periods into at
//! most `m` blocks, each block served by a timer whose period is the block's
//! gcd. Any other admissible timer period is a common divisor of the block
//! and therefore no larger than the gcd, so fixing `P_j = gcd` never loses
//! optimality (see `gcd_period_dominates_every_common_divisor` in the tests).
//!
//! Ties between partitions with the same objective are broken by the number
//! of timers used, then by the block sequence: blocks are listed in order of
//! their smallest period, and two blocks are compared at the first period on
//! which their membership differs, the block containing it ranking first.

mod brute;
mod exact;
mod greedy;
mod lp;

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::path::Path;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{checked_lcm, Mapping, Rational, TaskId, TaskSet, Time, TimerGroup, TimerId};

pub use brute::{brute_force_reference, BRUTE_FORCE_LIMIT};
pub use exact::{solve_exact, solve_exact_with, ExactOptions, DEFAULT_EXACT_BOUND};
pub use greedy::greedy_heuristic;
pub use lp::{export_miqcp, miqcp_lp};

/// Distinct task periods and a timer budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimizationProblem {
    periods: Vec<Time>,
    tasks: Vec<Vec<TaskId>>,
    timers: usize,
}

impl OptimizationProblem {
    pub fn from_task_set(tasks: &TaskSet, timers: usize) -> Result<Self> {
        let periods = tasks.distinct_periods();
        let members = periods
            .iter()
            .map(|p| tasks.tasks().iter().filter(|t| t.period == *p).map(|t| t.id).collect())
            .collect();
        OptimizationProblem::build(periods, members, timers)
    }

    /// Problem over bare periods. Each distinct period stands for one task
    /// whose id is the period's rank (1-based, ascending).
    pub fn from_periods(periods: &[Time], timers: usize) -> Result<Self> {
        let mut distinct = periods.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let members = (1..=distinct.len()).map(|i| vec![TaskId(i as u32)]).collect();
        OptimizationProblem::build(distinct, members, timers)
    }

    fn build(periods: Vec<Time>, tasks: Vec<Vec<TaskId>>, timers: usize) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::usage("optimization needs at least one period"));
        }
        if periods.contains(&0) {
            return Err(Error::usage("periods must be >= 1"));
        }
        if timers == 0 {
            return Err(Error::usage("timer budget must be >= 1"));
        }
        if periods.len() > 64 {
            return Err(Error::usage("at most 64 distinct periods are supported"));
        }
        checked_lcm(periods.iter().copied()).ok_or_else(|| Error::config("hyperperiod overflows"))?;
        Ok(OptimizationProblem { periods, tasks, timers })
    }

    /// Distinct periods, ascending.
    pub fn periods(&self) -> &[Time] {
        &self.periods
    }

    pub fn timers(&self) -> usize {
        self.timers
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn max_period(&self) -> Time {
        *self.periods.last().expect("nonempty")
    }

    pub fn with_timers(&self, timers: usize) -> Result<Self> {
        OptimizationProblem::build(self.periods.clone(), self.tasks.clone(), timers)
    }

    /// Same problem with every period multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        if factor == 0 {
            return Err(Error::usage("period factor must be >= 1"));
        }
        let periods = self
            .periods
            .iter()
            .map(|p| p.checked_mul(factor).ok_or_else(|| Error::config("scaled period overflows")))
            .collect::<Result<_>>()?;
        OptimizationProblem::build(periods, self.tasks.clone(), self.timers)
    }

    fn gcd_of(&self, block: u64) -> Time {
        members(block).fold(0, |g, i| g.gcd(&self.periods[i]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Exact,
    BruteForce,
    Greedy,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Exact => "exact",
            SolveMethod::BruteForce => "brute-force",
            SolveMethod::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    /// Search states expanded.
    pub nodes: u64,
    /// Candidate blocks (or whole partitions, for brute force) evaluated.
    pub subsets: u64,
}

/// One timer of a solution with the `d_i = T_i / P_j` witnesses of its periods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodGroup {
    pub timer: TimerId,
    pub period: Time,
    pub periods: Vec<Time>,
    pub divisors: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimizationResult {
    pub mapping: Mapping,
    pub objective: Rational,
    pub timers_used: usize,
    pub groups: Vec<PeriodGroup>,
    pub method: SolveMethod,
    pub stats: SolverStats,
}

impl OptimizationResult {
    fn from_blocks(problem: &OptimizationProblem, blocks: &[u64], method: SolveMethod, stats: SolverStats) -> Self {
        let mut groups = Vec::with_capacity(blocks.len());
        let mut timer_groups = Vec::with_capacity(blocks.len());
        for (k, &block) in blocks.iter().enumerate() {
            let timer = TimerId(k as u32 + 1);
            let period = problem.gcd_of(block);
            let periods: Vec<Time> = members(block).map(|i| problem.periods[i]).collect();
            let divisors = periods.iter().map(|p| p / period).collect();
            let mut tasks: Vec<TaskId> = members(block).flat_map(|i| problem.tasks[i].iter().copied()).collect();
            tasks.sort();
            groups.push(PeriodGroup { timer, period, periods, divisors });
            timer_groups.push(TimerGroup { id: timer, period, tasks });
        }
        let mapping = Mapping::from_groups(&timer_groups).expect("blocks are disjoint");
        OptimizationResult {
            objective: groups.iter().map(|g| Rational::unit(g.period)).sum(),
            timers_used: groups.len(),
            mapping,
            groups,
            method,
            stats,
        }
    }

    /// Period blocks as sorted lists, in timer order.
    pub fn partition(&self) -> Vec<Vec<Time>> {
        self.groups.iter().map(|g| g.periods.clone()).collect()
    }

    pub fn timer_periods(&self) -> Vec<Time> {
        self.groups.iter().map(|g| g.period).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ResultRepr::from(self))?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ResultRepr<'a> {
    timers: Vec<TimerGroup>,
    objective: Rational,
    timers_used: usize,
    method: SolveMethod,
    groups: &'a [PeriodGroup],
    stats: SolverStats,
}

impl<'a> From<&'a OptimizationResult> for ResultRepr<'a> {
    fn from(r: &'a OptimizationResult) -> Self {
        ResultRepr {
            timers: r.mapping.groups(),
            objective: r.objective,
            timers_used: r.timers_used,
            method: r.method,
            groups: &r.groups,
            stats: r.stats,
        }
    }
}

/// Exact solve when the instance fits, greedy otherwise.
pub fn solve(problem: &OptimizationProblem, options: &ExactOptions) -> OptimizationResult {
    match solve_exact_with(problem, options) {
        Ok(result) => result,
        Err(_) => greedy_heuristic(problem),
    }
}

pub(crate) fn members(block: u64) -> impl Iterator<Item = usize> {
    let mut rest = block;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

/// Order on blocks: at the lowest index where membership differs, the block
/// that contains the index comes first.
pub(crate) fn block_order(a: u64, b: u64) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        Ordering::Equal
    } else if a & diff & diff.wrapping_neg() != 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// Total order used to pick among optimal partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PartitionKey {
    pub cost: Rational,
    pub timers: usize,
    pub blocks: Vec<u64>,
}

impl PartialOrd for PartitionKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PartitionKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .cmp(&other.cost)
            .then(self.timers.cmp(&other.timers))
            .then_with(|| {
                for (a, b) in self.blocks.iter().zip(&other.blocks) {
                    match block_order(*a, *b) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                self.blocks.len().cmp(&other.blocks.len())
            })
    }
}

impl PartitionKey {
    pub fn of(problem: &OptimizationProblem, blocks: Vec<u64>) -> Self {
        PartitionKey {
            cost: blocks.iter().map(|b| Rational::unit(problem.gcd_of(*b))).sum(),
            timers: blocks.len(),
            blocks,
        }
    }
}

/// Indices of periods not divisible by any other (smaller) period.
pub(crate) fn divisibility_minimal(periods: &[Time]) -> Vec<usize> {
    (0..periods.len())
        .filter(|&i| !(0..i).any(|j| periods[i].is_multiple_of(periods[j])))
        .collect()
}

/// Lifts a partition of the minimal periods to all periods: every other
/// period joins the block holding its smallest minimal divisor, which keeps
/// each block's gcd unchanged.
pub(crate) fn attach_to_minimal(periods: &[Time], minimal: &[usize], reduced_blocks: &[u64]) -> Vec<u64> {
    let mut blocks: Vec<u64> = reduced_blocks
        .iter()
        .map(|rb| members(*rb).fold(0u64, |acc, k| acc | 1 << minimal[k]))
        .collect();
    for i in 0..periods.len() {
        if minimal.contains(&i) {
            continue;
        }
        let host = minimal.iter().copied().find(|&j| periods[i].is_multiple_of(periods[j])).expect("some minimal divisor");
        let block = blocks.iter_mut().find(|b| **b & (1 << host) != 0).expect("host is placed");
        *block |= 1 << i;
    }
    blocks
}
