use super::{
    attach_to_minimal, divisibility_minimal, members, OptimizationProblem, OptimizationResult, PartitionKey,
    SolveMethod, SolverStats,
};
use crate::model::Time;

/// Greedy grouping for instances the exact solver refuses.
///
/// Works on the divisibility-minimal periods. While more than one timer is
/// left, it extracts the block `{p : d | p}` maximising `d · |block|` over
/// all divisors `d` of remaining periods (ties: larger `d`); the last timer
/// takes whatever remains. The result is compared with the one-timer mapping
/// and the better of the two is returned.
pub fn greedy_heuristic(problem: &OptimizationProblem) -> OptimizationResult {
    let minimal = divisibility_minimal(problem.periods());
    let reduced: Vec<Time> = minimal.iter().map(|&i| problem.periods()[i]).collect();
    let mut stats = SolverStats::default();

    let full = if reduced.len() == 64 { u64::MAX } else { (1u64 << reduced.len()) - 1 };
    let mut remaining = full;
    let mut reduced_blocks = Vec::new();
    let mut timers_left = problem.timers();
    while remaining != 0 {
        stats.nodes += 1;
        if timers_left == 1 {
            reduced_blocks.push(remaining);
            break;
        }
        let mut best: Option<(u64, Time, u64)> = None;
        for i in members(remaining) {
            for d in (1..=reduced[i]).filter(|d| reduced[i].is_multiple_of(*d)) {
                let block = members(remaining).filter(|&k| reduced[k].is_multiple_of(d)).fold(0u64, |b, k| b | 1 << k);
                stats.subsets += 1;
                let gain = d * block.count_ones() as u64;
                let better = match best {
                    None => true,
                    Some((g, bd, _)) => gain > g || (gain == g && d > bd),
                };
                if better {
                    best = Some((gain, d, block));
                }
            }
        }
        let (_, _, block) = best.expect("remaining is nonempty");
        reduced_blocks.push(block);
        remaining &= !block;
        timers_left -= 1;
    }
    // Blocks are listed by smallest member to match the other solvers.
    reduced_blocks.sort_by_key(|b| b.trailing_zeros());

    let greedy = attach_to_minimal(problem.periods(), &minimal, &reduced_blocks);
    let all = if problem.len() == 64 { u64::MAX } else { (1u64 << problem.len()) - 1 };
    let greedy_key = PartitionKey::of(problem, greedy);
    let single_key = PartitionKey::of(problem, vec![all]);
    let chosen = if single_key <= greedy_key { single_key } else { greedy_key };
    OptimizationResult::from_blocks(problem, &chosen.blocks, SolveMethod::Greedy, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rational;
    use crate::optimizer::solve_exact;

    fn greedy(periods: &[Time], m: usize) -> OptimizationResult {
        greedy_heuristic(&OptimizationProblem::from_periods(periods, m).unwrap())
    }

    #[test]
    fn coprime_falls_back_to_single_group() {
        let r = greedy(&[2, 3, 5], 3);
        assert_eq!(r.objective, Rational::ONE);
        assert_eq!(r.timers_used, 1);
    }

    #[test]
    fn two_and_five() {
        let r = greedy(&[2, 5], 2);
        assert_eq!(r.partition(), vec![vec![2], vec![5]]);
        assert_eq!(r.objective, Rational::new(7, 10).unwrap());
    }

    #[test]
    fn never_worse_than_one_group() {
        let r = greedy(&[6, 10, 15], 3);
        assert!(r.objective <= Rational::ONE);
    }

    #[test]
    fn base_groups_found_for_generator_shape() {
        let periods: Vec<Time> = [3u64, 5, 7, 11].iter().flat_map(|b| (1..=10).map(move |r| b * r)).collect();
        let r = greedy(&periods, 4);
        assert_eq!(r.timer_periods(), vec![3, 5, 7, 11]);
        assert_eq!(r.objective, Rational::new(886, 1155).unwrap());
    }

    #[test]
    fn greedy_can_be_suboptimal() {
        // The largest d·|block| is {6} alone, which strands 4 and 5 on a
        // period-1 timer; the single-group fallback then wins with rate 1.
        let problem = OptimizationProblem::from_periods(&[4, 5, 6], 2).unwrap();
        let g = greedy_heuristic(&problem);
        let e = solve_exact(&problem).unwrap();
        assert_eq!(g.objective, Rational::ONE);
        assert_eq!(e.partition(), vec![vec![4, 6], vec![5]]);
        assert_eq!(e.objective, Rational::new(7, 10).unwrap());
    }
}
