//! Multi-timer tick dispatching for periodic task sets.
//!
//! A periodic task set is partitioned across several tick timers so that the
//! total tick-interrupt rate `Σ 1/P_j` is minimal ([`optimizer`]). Each timer
//! keeps its own tick counter and delayed-task list, and releases jobs with
//! one of four interrupt routines ([`dispatch`]). The [`sim`] module runs
//! whole task sets on a discrete time grid under an abstract cost model and
//! reports interrupt counts, overhead and deadline misses.

pub mod dispatch;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod sim;

pub use dispatch::{CostWeights, DispatcherState, OpCostLedger, StrategyKind, TickOutcome};
pub use error::{Error, Result};
pub use model::{
    expected_interrupt_rate, gcd_of_periods, generate_task_set, is_harmonic_chain, required_ticks,
    GenerationSpec, Mapping, Rational, Task, TaskId, TaskSet, Time, TimerConfig, TimerId, TIME_MAX,
};
pub use optimizer::{OptimizationProblem, OptimizationResult, SolveMethod};
pub use sim::{run, SimConfig, SimMetrics};
