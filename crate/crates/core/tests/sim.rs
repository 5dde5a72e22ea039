use chronos_core::model::{TimerGroup, UNBOUNDED_RELEASES};
use chronos_core::sim::{compare, oracle_releases, AfterLimit, EventKind, Horizon};
use chronos_core::{
    expected_interrupt_rate, run, Mapping, Rational, SimConfig, StrategyKind, TaskId, TaskSet, Time, TimerId,
};
use num_integer::Integer;
use proptest::prelude::*;

/// Tasks on timers by index; each timer's period is the gcd of its tasks'
/// periods divided by `shrink` when that divides it.
fn mapping_for(periods: &[Time], assign: &[usize], shrink: Time) -> (TaskSet, Mapping) {
    let ts = TaskSet::from_periods(periods, 0, UNBOUNDED_RELEASES).unwrap();
    let timers = assign.iter().max().unwrap() + 1;
    let groups: Vec<TimerGroup> = (0..timers)
        .filter_map(|j| {
            let tasks: Vec<TaskId> =
                (0..periods.len()).filter(|&i| assign[i] == j).map(|i| TaskId(i as u32 + 1)).collect();
            let g = tasks.iter().fold(0, |g: Time, t| g.gcd(&periods[t.0 as usize - 1]));
            (g > 0).then(|| TimerGroup {
                id: TimerId(j as u32 + 1),
                period: if g % shrink == 0 { g / shrink } else { g },
                tasks,
            })
        })
        .collect();
    (ts.clone(), Mapping::from_groups(&groups).unwrap())
}

fn instance() -> impl Strategy<Value = (Vec<Time>, Vec<usize>, Time)> {
    prop::collection::vec((1u64..=12, 0usize..3), 1..=6).prop_flat_map(|v| {
        let periods = v.iter().map(|x| x.0).collect::<Vec<_>>();
        let assign = v.iter().map(|x| x.1).collect::<Vec<_>>();
        (Just(periods), Just(assign), 1u64..=3)
    })
}

/// Harmonic groups: every period of timer `j` is `base_j · 2^k`.
fn harmonic_instance() -> impl Strategy<Value = (Vec<Time>, Vec<usize>)> {
    (prop::collection::vec(1u64..=3, 1..=3), prop::collection::vec((0usize..3, 0u32..4), 1..=6)).prop_map(
        |(bases, tasks)| {
            let assign: Vec<usize> = tasks.iter().map(|(j, _)| j % bases.len()).collect();
            let periods = tasks.iter().zip(&assign).map(|((_, k), j)| bases[*j] << k).collect();
            (periods, assign)
        },
    )
}

fn traced(ts: &TaskSet, m: &Mapping, s: StrategyKind, horizon: Time) -> chronos_core::SimMetrics {
    run(&SimConfig::new(ts.clone(), m.clone(), s, Horizon::Fixed(horizon)).with_trace(usize::MAX)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn releases_match_oracle((periods, assign, shrink) in instance()) {
        let (ts, m) = mapping_for(&periods, &assign, shrink);
        let h = ts.hyperperiod().unwrap();
        let oracle = oracle_releases(&ts, h);
        for s in [StrategyKind::Baseline, StrategyKind::Chronos, StrategyKind::ChronosConst] {
            prop_assert_eq!(&traced(&ts, &m, s, h).releases(), &oracle, "{}", s);
        }
    }

    #[test]
    fn harmonic_strategies_agree((periods, assign) in harmonic_instance()) {
        let (ts, m) = mapping_for(&periods, &assign, 1);
        prop_assume!(m.non_harmonic_groups(&ts).is_empty());
        let h = ts.hyperperiod().unwrap();
        let oracle = oracle_releases(&ts, h);
        for s in [StrategyKind::Chronos, StrategyKind::ChronosConst, StrategyKind::ChronosHarmonic] {
            prop_assert_eq!(&traced(&ts, &m, s, h).releases(), &oracle, "{}", s);
        }
    }

    #[test]
    fn interrupt_count_follows_rate((periods, assign, shrink) in instance()) {
        let (ts, m) = mapping_for(&periods, &assign, shrink);
        let h = ts.hyperperiod().unwrap();
        let metrics = traced(&ts, &m, StrategyKind::Chronos, h);
        let by_timer: u64 = m.used_timers().iter().map(|t| h / t.period).sum();
        prop_assert_eq!(metrics.total_interrupts, by_timer);
        let rate = expected_interrupt_rate(&m) * Rational::from_integer(h as i128);
        prop_assert_eq!(rate, Rational::from_integer(metrics.total_interrupts as i128));
        prop_assert_eq!(traced(&ts, &m, StrategyKind::Baseline, h).total_interrupts, h);
    }

    #[test]
    fn capacity_is_conserved(
        (periods, assign, shrink) in instance(),
        wcet in 0u64..6,
        capacity in 1u64..4,
        overhead in any::<bool>(),
        idle in any::<bool>(),
    ) {
        let (ts, m) = mapping_for(&periods, &assign, shrink);
        let ts = ts.with_wcet(wcet).with_releases(3);
        let mut cfg = SimConfig::new(ts, m, StrategyKind::ChronosConst, Horizon::UntilRetired);
        cfg.capacity_per_unit = capacity;
        cfg.overhead_as_time = overhead;
        cfg.work_per_cost_unit = 1;
        if idle {
            cfg.after_limit = AfterLimit::IdleReleases;
        }
        let metrics = run(&cfg).unwrap();
        prop_assert_eq!(
            metrics.busy_units + metrics.idle_units + metrics.overhead_units,
            capacity * metrics.total_time
        );
        if !overhead {
            prop_assert_eq!(metrics.overhead_units, 0);
        }
        prop_assert!(metrics.required_interrupts + metrics.not_required_interrupts == metrics.total_interrupts);
    }
}

#[test]
fn not_required_ticks_for_two_five() {
    let (ts, m) = mapping_for(&[2, 5], &[0, 1], 1);
    let base = traced(&ts, &m, StrategyKind::Baseline, 10);
    assert_eq!(base.not_required_times(), vec![1, 3, 7, 9]);
    let chronos = traced(&ts, &m, StrategyKind::Chronos, 10);
    assert_eq!(chronos.not_required_interrupts, 0);
    let at_ten = chronos.events(EventKind::Interrupt).filter(|e| e.time == 10).count();
    assert_eq!(at_ten, 2);
}

#[test]
fn runs_are_deterministic() {
    let (ts, m) = mapping_for(&[3, 6, 7, 14, 21], &[0, 0, 1, 1, 1], 1);
    let mut cfg = SimConfig::new(ts.with_wcet(2).with_releases(5), m, StrategyKind::Chronos, Horizon::UntilRetired).with_trace(10_000);
    cfg.overhead_as_time = true;
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn overhead_ordering_on_a_busy_group() {
    let periods: Vec<Time> = (0..24).map(|k| [4, 8, 12, 24][k % 4]).collect();
    let assign = vec![0; periods.len()];
    let (ts, m) = mapping_for(&periods, &assign, 1);
    let cfgs: Vec<SimConfig> = StrategyKind::ALL[..3]
        .iter()
        .map(|&s| SimConfig::new(ts.clone(), m.clone(), s, Horizon::Fixed(ts.hyperperiod().unwrap())))
        .collect();
    let report = compare(&cfgs).unwrap();
    let cost: Vec<u64> = report.rows.iter().map(|r| r.metrics.overhead_cost).collect();
    assert_eq!(report.rows[0].strategy, StrategyKind::Baseline);
    assert!(cost[0] > cost[1] && cost[0] > cost[2], "{cost:?}");
    assert!(report.rows[1..].iter().all(|r| r.overhead_ratio > 1.0));
}
