//! Shared fixtures for the criterion benches.

use chronos_core::model::UNBOUNDED_RELEASES;
use chronos_core::optimizer::{solve_exact, OptimizationProblem};
use chronos_core::{generate_task_set, GenerationSpec, Mapping, TaskSet, Time};

/// 100 tasks over bases 3/5/7/11, like the shipped presets.
pub fn preset_like(seed: u64, harmonic: bool) -> TaskSet {
    let spec = GenerationSpec {
        base_periods: vec![3, 5, 7, 11],
        factors: if harmonic { vec![1, 2, 4, 8, 16] } else { (1..=10).collect() },
        n_tasks: 100,
        period_factor: 1,
        seed,
        wcet: 0,
        harmonic,
        releases: UNBOUNDED_RELEASES,
    };
    generate_task_set(&spec).expect("valid spec")
}

pub fn optimal_mapping(tasks: &TaskSet, timers: usize) -> Mapping {
    let problem = OptimizationProblem::from_task_set(tasks, timers).expect("non-empty");
    solve_exact(&problem).expect("within bound").mapping
}

/// `n` tasks on one timer of period `p`, task `i` at period `p · 2^(i mod 5)`
/// so the group is harmonic.
pub fn one_group(n: usize, p: Time) -> (TaskSet, Mapping) {
    let periods: Vec<Time> = (0..n).map(|i| p << (i % 5)).collect();
    let ts = TaskSet::from_periods(&periods, 0, UNBOUNDED_RELEASES).expect("valid periods");
    let m = Mapping::single(&ts, p).expect("p divides every period");
    (ts, m)
}
