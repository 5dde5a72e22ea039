use std::hint::black_box;

use chronos_bench::{one_group, optimal_mapping, preset_like};
use chronos_core::sim::Horizon;
use chronos_core::{run, DispatcherState, OpCostLedger, SimConfig, StrategyKind, TaskId};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

/// One hyperperiod of tick-and-redelay on a single group, no simulator.
fn routines(c: &mut Criterion) {
    let mut g = c.benchmark_group("tick");
    for n in [10usize, 100] {
        let (ts, m) = one_group(n, 2);
        let horizon = ts.hyperperiod().unwrap();
        for s in [StrategyKind::Chronos, StrategyKind::ChronosConst, StrategyKind::ChronosHarmonic] {
            g.bench_with_input(BenchmarkId::new(s.name(), n), &n, |b, _| {
                b.iter(|| {
                    let mut d = DispatcherState::new(&ts, &m, s).unwrap();
                    let mut ledger = OpCostLedger::default();
                    let ready: Vec<TaskId> = d.ready().iter().collect();
                    for t in ready {
                        d.ready_mut().remove(t);
                        d.delay_task(t, 0, &mut ledger).unwrap();
                    }
                    while d.tick(0) < horizon {
                        let out = d.tick_timer(0, &mut ledger).unwrap();
                        for &t in &out.released {
                            d.ready_mut().remove(t);
                            d.delay_task(t, out.tick, &mut ledger).unwrap();
                        }
                    }
                    black_box(ledger)
                })
            });
        }
    }
    g.finish();
}

fn simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(20);
    let ts = preset_like(2024, true);
    let m = optimal_mapping(&ts, 4);
    for s in StrategyKind::ALL {
        let cfg = SimConfig::new(ts.clone(), m.clone(), s, Horizon::Fixed(2000));
        g.bench_function(s.name(), |b| b.iter(|| run(black_box(&cfg)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, routines, simulate);
criterion_main!(benches);
