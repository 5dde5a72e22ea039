use super::{OptimizationProblem, OptimizationResult, PartitionKey, SolveMethod, SolverStats};
use crate::error::{Error, Result};

pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Enumerates every partition of the distinct periods into at most `m`
/// blocks (restricted-growth strings) and keeps the best under the shared
/// tie-break. Test oracle for [`super::solve_exact`].
pub fn brute_force_reference(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    let n = problem.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::usage(format!("brute force limited to {BRUTE_FORCE_LIMIT} distinct periods, got {n}")));
    }
    let mut labels = vec![0usize; n];
    let mut best: Option<PartitionKey> = None;
    let mut stats = SolverStats::default();
    enumerate(problem, 1, 1, &mut labels, &mut best, &mut stats);
    let best = best.expect("at least one partition");
    Ok(OptimizationResult::from_blocks(problem, &best.blocks, SolveMethod::BruteForce, stats))
}

fn enumerate(
    problem: &OptimizationProblem,
    pos: usize,
    used: usize,
    labels: &mut Vec<usize>,
    best: &mut Option<PartitionKey>,
    stats: &mut SolverStats,
) {
    stats.nodes += 1;
    if pos >= labels.len() {
        stats.subsets += 1;
        let mut blocks = vec![0u64; used];
        for (i, &l) in labels.iter().enumerate() {
            blocks[l] |= 1 << i;
        }
        let key = PartitionKey::of(problem, blocks);
        if best.as_ref().is_none_or(|b| key < *b) {
            *best = Some(key);
        }
        return;
    }
    let max_label = used.min(problem.timers() - 1);
    for label in 0..=max_label {
        labels[pos] = label;
        let next_used = if label == used { used + 1 } else { used };
        enumerate(problem, pos + 1, next_used, labels, best, stats);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rational;

    #[test]
    fn enumerates_bell_numbers() {
        let p = OptimizationProblem::from_periods(&[2, 3, 5, 7, 11], 5).unwrap();
        let r = brute_force_reference(&p).unwrap();
        assert_eq!(r.stats.subsets, 52);
        let p = OptimizationProblem::from_periods(&[2, 5], 2).unwrap();
        assert_eq!(brute_force_reference(&p).unwrap().stats.subsets, 2);
    }

    #[test]
    fn examples() {
        let p = OptimizationProblem::from_periods(&[2, 5], 2).unwrap();
        assert_eq!(brute_force_reference(&p).unwrap().objective, Rational::new(7, 10).unwrap());

        let p = OptimizationProblem::from_periods(&[4], 3).unwrap();
        let r = brute_force_reference(&p).unwrap();
        assert_eq!((r.timers_used, r.timer_periods()), (1, vec![4]));
        assert_eq!(r.objective, Rational::new(1, 4).unwrap());

        // {2,4,8} into <= 2 blocks: 4 partitions, one block {2,4,8} wins.
        let p = OptimizationProblem::from_periods(&[2, 4, 8], 2).unwrap();
        let r = brute_force_reference(&p).unwrap();
        assert_eq!(r.stats.subsets, 4);
        assert_eq!(r.partition(), vec![vec![2, 4, 8]]);
        assert_eq!(r.objective, Rational::new(1, 2).unwrap());
    }

    #[test]
    fn refuses_large() {
        let periods: Vec<u64> = (1..=11).collect();
        let p = OptimizationProblem::from_periods(&periods, 2).unwrap();
        assert!(brute_force_reference(&p).is_err());
    }
}
