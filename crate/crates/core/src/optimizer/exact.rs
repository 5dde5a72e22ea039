use std::collections::HashMap;

use num_integer::Integer;

use super::{
    attach_to_minimal, block_order, divisibility_minimal, members, OptimizationProblem, OptimizationResult,
    SolveMethod, SolverStats,
};
use crate::error::{Error, Result};
use crate::model::{Rational, Time};

/// Largest number of distinct periods the exact solver accepts by default.
pub const DEFAULT_EXACT_BOUND: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    pub bound: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { bound: DEFAULT_EXACT_BOUND }
    }
}

pub fn solve_exact(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    solve_exact_with(problem, &ExactOptions::default())
}

/// Optimal partition by memoised search over (remaining periods, timers left).
///
/// The block holding the smallest remaining period is always closed: it
/// contains every remaining period divisible by its gcd. Adding such a period
/// never raises the cost and ranks the block earlier in the tie-break, so the
/// search only needs one candidate per divisor of that smallest period.
///
/// Instances above `options.bound` are first reduced to the periods that no
/// other period divides; the rest ride along for free (see
/// [`attach_to_minimal`]). If the reduced instance is still too large the
/// solver refuses.
pub fn solve_exact_with(problem: &OptimizationProblem, options: &ExactOptions) -> Result<OptimizationResult> {
    let n = problem.len();
    if n <= options.bound {
        let mut search = Search::new(problem.periods());
        let blocks = search.solve(problem.timers());
        return Ok(OptimizationResult::from_blocks(problem, &blocks, SolveMethod::Exact, search.stats));
    }

    let minimal = divisibility_minimal(problem.periods());
    if minimal.len() > options.bound {
        return Err(Error::BoundExceeded { distinct: minimal.len(), bound: options.bound });
    }
    let reduced: Vec<Time> = minimal.iter().map(|&i| problem.periods()[i]).collect();
    let mut search = Search::new(&reduced);
    let reduced_blocks = search.solve(problem.timers());
    let blocks = attach_to_minimal(problem.periods(), &minimal, &reduced_blocks);
    Ok(OptimizationResult::from_blocks(problem, &blocks, SolveMethod::Exact, search.stats))
}

#[derive(Debug, Clone)]
struct Entry {
    cost: Rational,
    timers: usize,
    first: u64,
}

struct Search<'a> {
    periods: &'a [Time],
    divisors: Vec<Vec<Time>>,
    memo: HashMap<(u64, usize), Entry>,
    stats: SolverStats,
}

impl<'a> Search<'a> {
    fn new(periods: &'a [Time]) -> Self {
        Search { periods, divisors: periods.iter().map(|&p| divisors_of(p)).collect(), memo: HashMap::new(), stats: SolverStats::default() }
    }

    fn solve(&mut self, timers: usize) -> Vec<u64> {
        let full = if self.periods.len() == 64 { u64::MAX } else { (1u64 << self.periods.len()) - 1 };
        let mut blocks = Vec::new();
        let (mut set, mut k) = (full, timers);
        while set != 0 {
            let entry = self.best(set, k);
            blocks.push(entry.first);
            set &= !entry.first;
            k -= 1;
        }
        blocks
    }

    fn best(&mut self, set: u64, timers: usize) -> Entry {
        if set == 0 {
            return Entry { cost: Rational::ZERO, timers: 0, first: 0 };
        }
        if let Some(e) = self.memo.get(&(set, timers)) {
            return e.clone();
        }
        self.stats.nodes += 1;

        let low = set.trailing_zeros() as usize;
        let mut tried: Vec<u64> = Vec::new();
        let mut best: Option<Entry> = None;
        for di in 0..self.divisors[low].len() {
            let d = self.divisors[low][di];
            let block = members(set).filter(|&i| self.periods[i].is_multiple_of(d)).fold(0u64, |b, i| b | 1 << i);
            if tried.contains(&block) {
                continue;
            }
            tried.push(block);
            let rest = set & !block;
            if rest != 0 && timers == 1 {
                continue;
            }
            self.stats.subsets += 1;
            let gcd = members(block).fold(0, |g, i| g.gcd(&self.periods[i]));
            let tail = self.best(rest, timers - 1);
            let candidate = Entry { cost: Rational::unit(gcd) + tail.cost, timers: 1 + tail.timers, first: block };
            let better = match &best {
                None => true,
                Some(b) => candidate
                    .cost
                    .cmp(&b.cost)
                    .then(candidate.timers.cmp(&b.timers))
                    .then(block_order(candidate.first, b.first))
                    .is_lt(),
            };
            if better {
                best = Some(candidate);
            }
        }
        let best = best.expect("the whole set is always a candidate");
        self.memo.insert((set, timers), best.clone());
        best
    }
}

fn divisors_of(value: Time) -> Vec<Time> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= value {
        if value.is_multiple_of(d) {
            small.push(d);
            if d * d != value {
                large.push(value / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}
